#pragma once

#include <set>
#include <string>
#include <vector>

#include "factorml/relation.hpp"

namespace factorml {

struct JoinTreeNode {
    std::string relation;
    int parent = -1;
    std::vector<int> children;               // sorted by child relation name
    std::set<std::string> edge_label;        // attrs shared with the rest of the tree
};

/// Rooted join tree over the query's relations. Satisfies the running
/// intersection property: for every attribute, the nodes containing it
/// form a connected subtree.
struct JoinTree {
    std::vector<JoinTreeNode> nodes;
    int root = -1;

    int node_of(const std::string &relation) const {
        for (size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].relation == relation) return static_cast<int>(i);
        return -1;
    }
};

/// Derives a join tree by GYO ear removal. Only alpha-acyclic queries are
/// supported; a stalled reduction raises an unsupported-query error naming
/// the residual relations. Deterministic: among removable ears the
/// lexicographically largest relation is removed first (so lexicographically
/// small relations end up near the root, and the two-relation query R,S
/// roots at R), and the lexicographically smallest witness becomes the
/// parent.
JoinTree gyo_join_tree(const QuerySpec &query, const Catalog &catalog);

/// Checks the running intersection property by traversal; used by tests.
bool satisfies_running_intersection(const JoinTree &tree, const Catalog &catalog);

}  // namespace factorml
