#include "factorml/join_tree.hpp"

#include <algorithm>
#include <map>

namespace factorml {

namespace {

std::set<std::string> attrs_of(const Catalog &catalog, const std::string &rel) {
    std::set<std::string> out;
    for (const auto &a : catalog.relation(rel).schema) out.insert(a.name);
    return out;
}

}  // namespace

JoinTree gyo_join_tree(const QuerySpec &query, const Catalog &catalog) {
    validate_query(query, catalog);

    // live hyperedges, keyed by relation name (sorted)
    std::map<std::string, std::set<std::string>> edges;
    for (const auto &r : query.relations) {
        if (edges.count(r))
            throw Error(ErrorKind::UnsupportedQuery, "relation '" + r + "' listed twice");
        edges[r] = attrs_of(catalog, r);
    }

    struct Removal {
        std::string ear;
        std::string witness;
        std::set<std::string> label;
    };
    std::vector<Removal> removals;

    while (edges.size() > 1) {
        // an ear's non-private attributes (those shared with some other live
        // edge) must all be covered by a single witness edge
        std::string best_ear, best_witness;
        std::set<std::string> best_label;
        for (const auto &[name, attrs] : edges) {
            std::set<std::string> shared;
            for (const auto &a : attrs) {
                for (const auto &[other, oattrs] : edges) {
                    if (other == name) continue;
                    if (oattrs.count(a)) {
                        shared.insert(a);
                        break;
                    }
                }
            }
            for (const auto &[witness, wattrs] : edges) {
                if (witness == name) continue;
                if (std::includes(wattrs.begin(), wattrs.end(), shared.begin(), shared.end())) {
                    if (best_ear.empty() || name > best_ear) {
                        best_ear = name;
                        best_witness = witness;
                        best_label = shared;
                    }
                    break;  // witnesses scanned in sorted order; first hit is smallest
                }
            }
        }
        if (best_ear.empty()) {
            std::string residual;
            for (const auto &[name, _] : edges) residual += (residual.empty() ? "" : ", ") + name;
            throw Error(ErrorKind::UnsupportedQuery,
                        "cyclic query: GYO reduction stalls on relations " + residual);
        }
        removals.push_back({best_ear, best_witness, best_label});
        edges.erase(best_ear);
    }

    JoinTree tree;
    std::map<std::string, int> node_index;
    auto add_node = [&](const std::string &rel) {
        JoinTreeNode node;
        node.relation = rel;
        tree.nodes.push_back(std::move(node));
        node_index[rel] = static_cast<int>(tree.nodes.size()) - 1;
        return node_index[rel];
    };

    tree.root = add_node(edges.begin()->first);
    // attach ears in reverse removal order so parents exist first
    for (auto it = removals.rbegin(); it != removals.rend(); ++it) {
        int id = add_node(it->ear);
        int parent = node_index.at(it->witness);
        tree.nodes[id].parent = parent;
        tree.nodes[id].edge_label = it->label;
        tree.nodes[parent].children.push_back(id);
    }
    for (auto &node : tree.nodes)
        std::sort(node.children.begin(), node.children.end(), [&](int a, int b) {
            return tree.nodes[a].relation < tree.nodes[b].relation;
        });
    return tree;
}

bool satisfies_running_intersection(const JoinTree &tree, const Catalog &catalog) {
    // collect every attribute of the tree
    std::set<std::string> all_attrs;
    for (const auto &node : tree.nodes)
        for (const auto &a : catalog.relation(node.relation).schema) all_attrs.insert(a.name);

    for (const auto &attr : all_attrs) {
        // nodes containing attr must form one connected subtree: each such
        // node except one must have a parent chain step that also contains it
        std::vector<int> holders;
        for (size_t i = 0; i < tree.nodes.size(); ++i)
            if (catalog.relation(tree.nodes[i].relation).has_attr(attr))
                holders.push_back(static_cast<int>(i));
        if (holders.size() <= 1) continue;
        // climb from every holder towards the root while inside holder set;
        // all climbs must converge to the same topmost holder
        int top = -1;
        for (int h : holders) {
            int cur = h;
            while (tree.nodes[cur].parent >= 0 &&
                   catalog.relation(tree.nodes[tree.nodes[cur].parent].relation).has_attr(attr))
                cur = tree.nodes[cur].parent;
            if (top == -1)
                top = cur;
            else if (top != cur)
                return false;
        }
    }
    return true;
}

}  // namespace factorml
