#include "factorml/plan.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace factorml {

namespace {

void post_order(const JoinTree &tree, int node, std::vector<int> &out) {
    for (int c : tree.nodes[node].children) post_order(tree, c, out);
    out.push_back(node);
}

}  // namespace

ViewPlan compile_view_plan(const JoinTree &tree, const Catalog &catalog,
                           const std::set<std::string> &group_by) {
    // validate group-by attributes against the tree's relations
    for (const auto &g : group_by) {
        bool found = false;
        for (const auto &node : tree.nodes)
            if (catalog.relation(node.relation).has_attr(g)) found = true;
        if (!found)
            throw Error(ErrorKind::UnsupportedQuery,
                        "group-by attribute '" + g + "' appears in no query relation");
    }

    std::vector<int> order;
    post_order(tree, tree.root, order);

    // group-by attributes reachable in each subtree
    std::vector<std::set<std::string>> subtree_gb(tree.nodes.size());
    for (int ti : order) {
        for (const auto &a : catalog.relation(tree.nodes[ti].relation).schema)
            if (group_by.count(a.name)) subtree_gb[ti].insert(a.name);
        for (int c : tree.nodes[ti].children)
            subtree_gb[ti].insert(subtree_gb[c].begin(), subtree_gb[c].end());
    }

    ViewPlan plan;
    plan.group_by.assign(group_by.begin(), group_by.end());
    std::map<int, int> plan_index;  // tree node -> plan node

    for (int ti : order) {
        const JoinTreeNode &tnode = tree.nodes[ti];
        const Relation &rel = catalog.relation(tnode.relation);

        PlanNode node;
        node.tree_node = ti;
        node.relation = tnode.relation;

        const std::set<std::string> &label = tnode.edge_label;  // empty at the root
        node.key_attrs.assign(label.begin(), label.end());
        node.label_width = static_cast<int>(node.key_attrs.size());
        for (const auto &g : subtree_gb[ti])
            if (!label.count(g)) node.key_attrs.push_back(g);

        // own attributes: everything not shared with the parent side is
        // lifted here (this node tops the attribute's connected subtree)
        for (size_t cell = 0; cell < rel.schema.size(); ++cell) {
            const std::string &a = rel.schema[cell].name;
            if (label.count(a)) continue;
            node.lift_cells.push_back({static_cast<int>(cell), a});
            bool retained = std::find(node.key_attrs.begin(), node.key_attrs.end(), a) !=
                            node.key_attrs.end();
            if (!retained) node.marginalized.push_back(a);
        }

        // children references
        for (int tc : tnode.children) {
            PlanNode::ChildRef ref;
            ref.plan_node = plan_index.at(tc);
            const PlanNode &child = plan.nodes[ref.plan_node];
            for (int k = 0; k < child.label_width; ++k) {
                int cell = rel.attr_index(child.key_attrs[k]);
                if (cell < 0)
                    throw Error(ErrorKind::Internal, "join tree edge label not in parent relation");
                ref.probe_cells.push_back(cell);
            }
            ref.n_extras = static_cast<int>(child.key_attrs.size()) - child.label_width;
            for (int e = 0; e < ref.n_extras; ++e) {
                const std::string &a = child.key_attrs[child.label_width + e];
                auto it = std::find(node.key_attrs.begin(), node.key_attrs.end(), a);
                if (it == node.key_attrs.end())
                    throw Error(ErrorKind::Internal, "child extra attribute lost at parent");
                ref.extra_targets.push_back(static_cast<int>(it - node.key_attrs.begin()));
            }
            node.children.push_back(std::move(ref));
        }

        // key sources
        node.key_sources.resize(node.key_attrs.size());
        for (size_t kp = 0; kp < node.key_attrs.size(); ++kp) {
            int cell = rel.attr_index(node.key_attrs[kp]);
            if (cell >= 0) {
                node.key_sources[kp].own_cell = cell;
                continue;
            }
            bool found = false;
            for (size_t ci = 0; ci < node.children.size() && !found; ++ci) {
                const auto &ref = node.children[ci];
                for (int e = 0; e < ref.n_extras; ++e) {
                    if (ref.extra_targets[e] == static_cast<int>(kp)) {
                        node.key_sources[kp].child = static_cast<int>(ci);
                        node.key_sources[kp].child_extra = e;
                        found = true;
                        break;
                    }
                }
            }
            if (!found)
                throw Error(ErrorKind::Internal,
                            "no source for key attribute '" + node.key_attrs[kp] + "'");
        }

        plan_index[ti] = static_cast<int>(plan.nodes.size());
        plan.nodes.push_back(std::move(node));
    }
    plan.root_key_attrs = plan.nodes.back().key_attrs;
    return plan;
}

std::string explain(const ViewPlan &plan) {
    std::ostringstream out;
    out << "view plan (" << plan.nodes.size() << " views, group_by=[";
    for (size_t i = 0; i < plan.group_by.size(); ++i)
        out << (i ? ", " : "") << plan.group_by[i];
    out << "])\n";
    auto list = [&](const std::vector<std::string> &v) {
        std::string s = "(";
        for (size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
        return s + ")";
    };
    for (size_t i = 0; i < plan.nodes.size(); ++i) {
        const PlanNode &n = plan.nodes[i];
        out << "  [" << i << "] " << n.relation << " keys=" << list(n.key_attrs)
            << " marginalizes=" << list(n.marginalized) << " children=[";
        for (size_t c = 0; c < n.children.size(); ++c)
            out << (c ? ", " : "") << n.children[c].plan_node;
        out << "]";
        if (i + 1 == plan.nodes.size()) out << " root";
        out << "\n";
    }
    return out.str();
}

}  // namespace factorml
