#pragma once

#include "idxf/allocation.hpp"
#include "idxf/dataset.hpp"
#include "idxf/errors.hpp"
#include "idxf/evaluation.hpp"
#include "idxf/forecast.hpp"
#include "idxf/index_builder.hpp"
#include "idxf/market_data.hpp"
#include "idxf/riskmodel.hpp"
#include "idxf/selection.hpp"
