#pragma once

#include <set>
#include <string>
#include <vector>

#include "factorml/join_tree.hpp"
#include "factorml/relation.hpp"

namespace factorml {

/// One node of a compiled view plan. View keys are laid out label part
/// first (attributes shared with the parent side, sorted) and then the
/// extra part (group-by attributes private to this subtree, sorted), so a
/// parent can probe a child view by key prefix.
struct PlanNode {
    int tree_node = -1;
    std::string relation;

    std::vector<std::string> key_attrs;  // label part ++ extra part
    int label_width = 0;

    /// Where each key cell comes from: the node's own tuple, or one
    /// child's extra part.
    struct KeySource {
        int own_cell = -1;
        int child = -1;       // index into children
        int child_extra = -1; // position within the child's extra part
    };
    std::vector<KeySource> key_sources;

    /// Own attributes lifted at this node (every attribute of the relation
    /// not shared with the parent side; this node is the topmost holder).
    std::vector<std::pair<int, std::string>> lift_cells;  // (tuple cell, attr)

    std::vector<std::string> marginalized;  // lifted attrs not retained in the key

    struct ChildRef {
        int plan_node = -1;
        std::vector<int> probe_cells;    // own tuple cells giving the child's label part
        int n_extras = 0;
        std::vector<int> extra_targets;  // my key position per child extra position
    };
    std::vector<ChildRef> children;
};

/// Compiled bottom-up evaluation plan: nodes in post order (children before
/// parents, root last). Deterministic for a given join tree and group-by.
struct ViewPlan {
    std::vector<PlanNode> nodes;
    std::vector<std::string> group_by;        // as requested
    std::vector<std::string> root_key_attrs;  // sorted; equals root node's key
    int plan_node_of(const std::string &relation) const {
        for (size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].relation == relation) return static_cast<int>(i);
        return -1;
    }
};

/// Compiles the view hierarchy for a join tree. Each node marginalizes its
/// private attributes; group-by attributes are retained and propagated to
/// the root, which keys on exactly the requested group-by set.
ViewPlan compile_view_plan(const JoinTree &tree, const Catalog &catalog,
                           const std::set<std::string> &group_by);

/// Textual rendering of a plan (node order, keys, marginalized attributes);
/// stable across runs.
std::string explain(const ViewPlan &plan);

}  // namespace factorml
