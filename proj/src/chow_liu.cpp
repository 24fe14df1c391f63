#include "factorml/chow_liu.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "factorml/join_tree.hpp"

namespace factorml {

double mutual_information(const PairCounts &counts) {
    double total = 0;
    std::map<int32_t, double> row, col;
    for (const auto &[uv, n] : counts) {
        if (n == 0) continue;
        total += static_cast<double>(n);
        row[uv.first] += static_cast<double>(n);
        col[uv.second] += static_cast<double>(n);
    }
    if (total <= 0)
        throw Error(ErrorKind::UndefinedMI, "mutual information over empty counts is undefined");

    double mi = 0;
    for (const auto &[uv, n] : counts) {
        if (n == 0) continue;
        double p = static_cast<double>(n) / total;
        double pu = row[uv.first] / total;
        double pv = col[uv.second] / total;
        mi += p * std::log(p / (pu * pv));
    }
    return mi;
}

double ChowLiuTree::total_weight() const {
    std::vector<Edge> sorted = edges;
    std::sort(sorted.begin(), sorted.end(), [](const Edge &x, const Edge &y) {
        return std::tie(x.a, x.b) < std::tie(y.a, y.b);
    });
    double w = 0;
    for (const auto &e : sorted) w += e.mi;
    return w;
}

ChowLiuTree train_chow_liu(const Catalog &db, const QuerySpec &query,
                           const std::vector<std::string> &attrs) {
    if (attrs.size() < 2)
        throw Error(ErrorKind::UnsupportedQuery, "a tree needs at least 2 attributes");
    for (const auto &a : attrs) {
        auto kind = db.attr_kind(a);
        if (!kind) throw Error(ErrorKind::UnsupportedQuery, "unknown attribute '" + a + "'");
        if (*kind != AttrKind::Categorical)
            throw Error(ErrorKind::UnsupportedAttribute,
                        "attribute '" + a + "' is continuous; bin it first (e.g. the CLI's "
                        "--bins equi-width binning)");
    }
    for (size_t i = 0; i < attrs.size(); ++i)
        for (size_t j = i + 1; j < attrs.size(); ++j)
            if (attrs[i] == attrs[j])
                throw Error(ErrorKind::UnsupportedQuery,
                            "attribute '" + attrs[i] + "' listed twice");

    // one shared pass: the covariance payload over the categorical
    // attributes carries every pairwise occurrence count in its q entries
    QuerySpec counts_query;
    counts_query.relations = query.relations;
    counts_query.features = attrs;
    SigmaResult sig = sigma(db, counts_query);
    if (sig.payload.c < 0.5)
        throw Error(ErrorKind::EmptyTrainingSet, "the join result has no tuples");

    const size_t k = attrs.size();
    std::vector<PairCounts> pair_counts(k * k);
    for (const auto &[pair, v] : sig.payload.q) {
        if (pair.a.feature == pair.b.feature) continue;  // diagonal blocks
        auto i = static_cast<size_t>(pair.a.feature);
        auto j = static_cast<size_t>(pair.b.feature);
        pair_counts[i * k + j][{pair.a.category, pair.b.category}] =
            static_cast<int64_t>(std::llround(v));
    }

    struct Candidate {
        double mi;
        size_t i, j;  // attrs[i] < attrs[j] not guaranteed; i < j in spec order
    };
    std::vector<Candidate> cands;
    for (size_t i = 0; i < k; ++i)
        for (size_t j = i + 1; j < k; ++j)
            cands.push_back({mutual_information(pair_counts[i * k + j]), i, j});

    // descending MI, ties on the lexicographic attribute pair
    auto pair_name = [&](const Candidate &c) {
        return attrs[c.i] < attrs[c.j] ? std::pair(attrs[c.i], attrs[c.j])
                                       : std::pair(attrs[c.j], attrs[c.i]);
    };
    std::stable_sort(cands.begin(), cands.end(), [&](const Candidate &x, const Candidate &y) {
        if (x.mi != y.mi) return x.mi > y.mi;
        return pair_name(x) < pair_name(y);
    });

    // Kruskal with union-find
    std::vector<size_t> parent(k);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };

    ChowLiuTree tree;
    tree.attrs = attrs;
    for (const auto &c : cands) {
        size_t ra = find(c.i), rb = find(c.j);
        if (ra == rb) continue;
        parent[ra] = rb;
        auto [na, nb] = pair_name(c);
        tree.edges.push_back({na, nb, c.mi});
        if (tree.edges.size() == k - 1) break;
    }
    std::sort(tree.edges.begin(), tree.edges.end(), [](const auto &x, const auto &y) {
        return std::tie(x.a, x.b) < std::tie(y.a, y.b);
    });
    return tree;
}

}  // namespace factorml
