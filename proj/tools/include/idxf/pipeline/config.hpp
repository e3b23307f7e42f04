#pragma once

// Pipeline configuration: one YAML file describing inputs, method choices and
// training hyperparameters. Relative paths resolve against the file's directory.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "idxf/allocation.hpp"
#include "idxf/dataset.hpp"
#include "idxf/forecast.hpp"
#include "idxf/market_data.hpp"
#include "idxf/riskmodel.hpp"

namespace idxf::pipeline {

/// Bad configuration or inputs; maps to exit code 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Command { select, allocate, build_index, make_dataset, run_experiment, report };

std::string_view to_string(Command c);

struct DataConfig {
    std::vector<std::pair<std::string, std::filesystem::path>> prices; ///< ticker -> price CSV, sorted by ticker
    CsvSchema schema;
    PriceField price_field = PriceField::adjusted_close;
    ReturnMode return_mode = ReturnMode::simple_with_dividends;
    std::optional<std::filesystem::path> market;  ///< benchmark prices for beta; default: universe average
    std::optional<std::filesystem::path> metrics; ///< fundamentals CSV for `select`
    std::vector<std::pair<std::string, std::filesystem::path>> factors; ///< in configured order
    std::optional<std::filesystem::path> index;   ///< prebuilt index CSV; default: <output>/index.csv
};

struct SelectionConfig {
    std::array<double, 6> weights{1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6};
    std::size_t top_k = 8;
};

struct RiskConfig {
    LinkageMethod linkage = LinkageMethod::single;
    DistanceConvention distance = DistanceConvention::correlation;
    AlignPolicy align = AlignPolicy::intersect;
    int clusters = 0; ///< > 0 writes cluster aggregates for that many clusters
};

struct AllocationConfig {
    Strategy strategy = Strategy::hrp_paper;
    /// "all" (every priced ticker), "selected" (<output>/selection.csv) or an explicit list.
    std::string universe = "all";
    std::vector<std::string> constituents;
};

struct IndexConfig {
    /// "allocated" (<output>/weights.csv), "published" (built-in table) or a weights CSV path.
    std::string weights = "allocated";
    std::optional<std::filesystem::path> weights_path;
};

struct DatasetConfig {
    std::size_t lookback = 20;
    double train_fraction = 0.8;
    FactorMode factor_mode = FactorMode::returns;
};

struct PipelineConfig {
    std::filesystem::path source;     ///< config file path
    std::filesystem::path output_dir; ///< absolute after overrides
    std::uint64_t seed = 42;
    DataConfig data;
    SelectionConfig selection;
    RiskConfig risk;
    AllocationConfig allocation;
    IndexConfig index;
    DatasetConfig dataset;
    TrainConfig training;

    std::filesystem::path output(const std::string& name) const { return output_dir / name; }
    std::filesystem::path index_path() const { return data.index ? *data.index : output("index.csv"); }
};

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> output_dir;
};

/// Parses and structurally validates the file. Throws ValidationError.
PipelineConfig load_config(const std::filesystem::path& path, const Overrides& overrides = {});
PipelineConfig parse_config(const std::string& yaml_text, const std::filesystem::path& base_dir,
                            const Overrides& overrides = {});

/// Reads IDXF_SEED / IDXF_OUTPUT_DIR; explicit values in `cli` win.
Overrides merge_environment(Overrides cli);

/// Checks that every input `command` reads exists. Throws ValidationError.
void validate_inputs(const PipelineConfig& cfg, Command command);

} // namespace idxf::pipeline
