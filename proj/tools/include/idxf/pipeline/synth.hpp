#pragma once

// Self-contained synthetic workspace: Yahoo-style price files for a block-
// correlated universe, factor level files whose lagged returns drive the
// constituents, a fundamentals file and a ready-to-run config.

#include <cstdint>
#include <filesystem>
#include <vector>

namespace idxf::pipeline {

struct SynthOptions {
    std::size_t companies = 10;
    std::size_t days = 750;   ///< return observations; price files hold days + 1 rows
    std::size_t factors = 11; ///< first six named IDX*, the rest ETF*
    std::uint64_t seed = 7;
    double signal = 0.6;      ///< share of constituent variance explained by lagged factors
};

/// Writes data/ and config.yaml under `dir`; returns the written paths.
std::vector<std::filesystem::path> write_synthetic_workspace(const std::filesystem::path& dir,
                                                             const SynthOptions& opts = {});

} // namespace idxf::pipeline
