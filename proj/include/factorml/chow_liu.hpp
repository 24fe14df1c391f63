#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "factorml/engine.hpp"

namespace factorml {

using PairCounts = std::map<std::pair<int32_t, int32_t>, int64_t>;

/// Mutual information in nats from joint occurrence counts, with marginals
/// taken from the same table: MI = sum p(u,v) ln(p(u,v) / (p(u) p(v))),
/// 0 ln 0 = 0. Raises an undefined-MI error on an empty table.
double mutual_information(const PairCounts &counts);

struct ChowLiuTree {
    struct Edge {
        std::string a, b;  // a < b
        double mi = 0;
    };
    std::vector<std::string> attrs;
    std::vector<Edge> edges;  // |attrs| - 1 edges, spanning

    /// Total MI summed in canonical (sorted edge) order; lets two trees
    /// over the same MI table be compared exactly.
    double total_weight() const;
};

/// Maximum spanning tree over pairwise mutual information of categorical
/// attributes. All pairwise counts come from one shared covariance-ring
/// pass over the view hierarchy (the degree-2 entries of the payload are
/// exactly the pair occurrence counts). Continuous attributes are rejected
/// with a hint to bin them first. Ties break on the lexicographic
/// attribute pair.
ChowLiuTree train_chow_liu(const Catalog &db, const QuerySpec &query,
                           const std::vector<std::string> &attrs);

}  // namespace factorml
