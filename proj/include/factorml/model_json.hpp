#pragma once

#include <json.hpp>

#include "factorml/cart.hpp"
#include "factorml/chow_liu.hpp"
#include "factorml/ridge.hpp"

namespace factorml {

using json = nlohmann::json;

// Machine-readable outputs; nlohmann objects keep keys sorted, so dumps are
// byte-stable for byte-identical inputs.

json feature_key_json(const FeatureKey &key, const LiftSpec &spec, const Catalog &catalog);
json sigma_json(const CovariancePayload &payload, const LiftSpec &spec, const Catalog &catalog);
json group_counts_json(const GroupCounts &counts, const std::vector<std::string> &attrs,
                       const Catalog &catalog);

json ridge_model_json(const RidgeModel &model, const Catalog &catalog);
json decision_tree_json(const DecisionTree &tree, const Catalog &catalog);
json chow_liu_json(const ChowLiuTree &tree);

/// Parses {"relations": [...], "features": [...], "response": ..., "intercept": ...}.
QuerySpec query_spec_from_json(const json &j);

}  // namespace factorml
