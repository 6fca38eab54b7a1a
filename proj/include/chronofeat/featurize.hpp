#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chronofeat/feature_matrix.hpp"
#include "chronofeat/folds.hpp"
#include "chronofeat/ingest.hpp"
#include "chronofeat/te.hpp"
#include "chronofeat/timeagg.hpp"

namespace chronofeat {

/// The benchmarked length tuples of the design grid.
const std::vector<std::vector<int>>& default_length_tuples();
/// The benchmarked shapes (excludes `none`).
const std::vector<WindowShape>& default_shapes();

struct FeaturizeOptions {
  std::vector<std::string> entity_keys = default_entity_keys();
  int horizon_cap = kDefaultHorizonCap;
  SmoothedRateParams rate_params;
};

/// Deterministic column layout for a configuration: base features
/// (hour_of_day, plus prior_ctr when TE is on), the TE block in schema
/// column order, then the time-aggregation block per entity key. Shapes
/// calendar and event50 add their columns on top of trailing windows;
/// gap1 and bucket replace them.
std::vector<std::string> feature_column_names(const WindowSpec& spec, bool te_on,
                                              const LogSchema& schema,
                                              const std::vector<std::string>& entity_keys);

/// Closed-form column count for a grid cell; must agree with
/// feature_column_names and with the reference dimensionality table.
std::size_t expected_feature_count(const WindowSpec& spec, bool te_on,
                                   std::size_t n_cat_columns, std::size_t n_entity_keys);

/// Assembles the feature matrix for one (fold, spec, te flag) cell over the
/// fold's full day range (train start through test end), under per-hour
/// batching. Events must be sorted by hour ascending; `te_cache` is required
/// when `te_on` and must cover every featurized row_id.
FeatureMatrix featurize_fold(const std::vector<ImpressionEvent>& events,
                             const LogSchema& schema, const FoldAssignment& fold,
                             const WindowSpec& spec, bool te_on,
                             const FeatureMatrix* te_cache,
                             const FeaturizeOptions& options = {});

}  // namespace chronofeat
