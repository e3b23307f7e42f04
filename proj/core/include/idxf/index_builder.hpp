#pragma once

// Industry index return series: a fixed weighted sum of constituent returns.

#include <filesystem>
#include <string>
#include <vector>

#include "idxf/allocation.hpp"
#include "idxf/market_data.hpp"

namespace idxf {

struct IndexSeries {
    std::vector<Date> dates;
    std::vector<double> returns;
    Weights weights_used;

    TimeSeries as_series(std::string name = "INDEX") const;
};

/// index[t] = sum_i w_i * R_i[t] over the panel's dates. Every weight ticker
/// must be a panel column (extra panel columns are ignored).
IndexSeries build_index(const Weights& weights, const AlignedPanel& returns);

/// The published eight-company heavy-machinery weights (CAT, DE, CNHI, AGCO,
/// TEX, ASTE, MTW, KMTUY). As printed they sum to 1.0001, so they are
/// rescaled to the simplex; each still rounds to its printed 4-decimal value.
Weights heavy_machinery_weights();

/// Two-column CSV: date,return.
std::string index_to_csv(const IndexSeries& index);
void write_index_csv(const std::filesystem::path& path, const IndexSeries& index);
TimeSeries read_index_csv(const std::filesystem::path& path, std::string name = "INDEX");

} // namespace idxf
