// idxf: industry index construction and forecasting pipeline.
//
// Exit codes: 0 success, 1 invalid configuration or input, 2 runtime failure.

#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "idxf/errors.hpp"
#include "idxf/pipeline/commands.hpp"
#include "idxf/pipeline/synth.hpp"

namespace fs = std::filesystem;
using namespace idxf::pipeline;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

void setup_logging(int verbosity)
{
    auto logger = spdlog::stderr_logger_st("idxf");
    logger->set_pattern("[%l] %v");
    logger->set_level(verbosity >= 2 ? spdlog::level::debug
                      : verbosity == 1 ? spdlog::level::info
                                       : spdlog::level::warn);
    spdlog::set_default_logger(logger);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Industry index pipeline: selection, risk model, allocation, index, datasets, forecasting"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path = "idxf.yaml";
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir;
    int verbosity = 0;
    app.add_option("-c,--config", config_path, "Pipeline configuration (YAML)");
    app.add_option("-s,--seed", seed, "Override the base seed (also IDXF_SEED)");
    app.add_option("-o,--output-dir", output_dir, "Override the output directory (also IDXF_OUTPUT_DIR)");
    app.add_flag("-v,--verbose", verbosity, "Increase log verbosity (-v info, -vv debug)");

    const std::pair<const char*, Command> commands[] = {
        {"select", Command::select},
        {"allocate", Command::allocate},
        {"build-index", Command::build_index},
        {"make-dataset", Command::make_dataset},
        {"run-experiment", Command::run_experiment},
        {"report", Command::report},
    };
    const char* help[] = {
        "Score the universe and write the top-k constituents",
        "Estimate the risk model and write index weights",
        "Build the index return series from the weights",
        "Write the windowed, scaled forecasting datasets",
        "Train both models on both datasets and write the comparison report",
        "Re-render the comparison table from a written report",
    };
    std::optional<Command> chosen;
    for (std::size_t i = 0; i < std::size(commands); ++i) {
        auto* sub = app.add_subcommand(commands[i].first, help[i]);
        sub->callback([&chosen, c = commands[i].second] { chosen = c; });
    }

    SynthOptions synth;
    std::string synth_dir = "idxf-synthetic";
    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic workspace (data files + config.yaml)");
    synth_cmd->add_option("--dir", synth_dir, "Target directory");
    synth_cmd->add_option("--companies", synth.companies, "Number of companies")->check(CLI::Range(2, 100));
    synth_cmd->add_option("--days", synth.days, "Return observations")->check(CLI::Range(60, 100000));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kInvalid;
    }
    setup_logging(verbosity);

    try {
        if (synth_cmd->parsed()) {
            if (seed)
                synth.seed = *seed;
            const auto files = write_synthetic_workspace(synth_dir, synth);
            fmt::print("wrote {} files; try: idxf --config {} select\n", files.size(),
                       (fs::path(synth_dir) / "config.yaml").string());
            return kOk;
        }

        Overrides ov;
        ov.seed = seed;
        if (output_dir)
            ov.output_dir = fs::path(*output_dir);
        const auto cfg = load_config(config_path, merge_environment(ov));
        spdlog::info("{}: output directory {}", to_string(*chosen), cfg.output_dir.string());
        const auto result = run_command(cfg, *chosen);
        std::fputs(result.stdout_text.c_str(), stdout);
        return kOk;
    } catch (const ValidationError& e) {
        spdlog::error("{}", e.what());
        return kInvalid;
    } catch (const idxf::ParseError& e) {
        spdlog::error("{}", e.what());
        return kInvalid;
    } catch (const std::invalid_argument& e) {
        spdlog::error("{}", e.what());
        return kInvalid;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kRuntime;
    }
}
