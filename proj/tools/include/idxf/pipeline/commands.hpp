#pragma once

// Pipeline commands. Each validates its inputs before writing anything and
// writes every artifact atomically into the configured output directory.

#include <filesystem>
#include <string>
#include <vector>

#include "idxf/dataset.hpp"
#include "idxf/pipeline/config.hpp"

namespace idxf::pipeline {

struct CommandResult {
    std::vector<std::filesystem::path> outputs;
    std::string stdout_text; ///< printed by the CLI after the command succeeds
};

CommandResult run_select(const PipelineConfig& cfg);
CommandResult run_allocate(const PipelineConfig& cfg);
CommandResult run_build_index(const PipelineConfig& cfg);
CommandResult run_make_dataset(const PipelineConfig& cfg);
CommandResult run_experiment(const PipelineConfig& cfg);
CommandResult run_report(const PipelineConfig& cfg);

/// validate_inputs() followed by the matching command.
CommandResult run_command(const PipelineConfig& cfg, Command command);

/// The two forecasting datasets built from the index series and factor files.
struct ExperimentData {
    AlignedPanel features; ///< index column followed by one column per factor
    DatasetSplit dataset1;
    DatasetSplit dataset2;
};

ExperimentData build_experiment_data(const PipelineConfig& cfg);

/// feature,min,max
std::string scaler_to_csv(const std::vector<std::string>& features, const Scaler& s);

} // namespace idxf::pipeline
