#include "factorml/cart.hpp"

#include <algorithm>
#include <cmath>

namespace factorml {

std::vector<Predicate> candidates_for_attribute(const std::string &attr, AttrKind kind,
                                                const std::map<Value, int64_t> &distribution,
                                                int n_thresholds) {
    std::vector<Predicate> out;
    if (kind == AttrKind::Categorical) {
        for (const auto &[value, count] : distribution) {
            if (count <= 0) continue;
            Predicate p;
            p.attr = attr;
            p.op = Predicate::Op::EQ;
            p.categories = {static_cast<int32_t>(value)};
            out.push_back(std::move(p));
        }
        return out;
    }

    int64_t total = 0;
    for (const auto &[value, count] : distribution) total += std::max<int64_t>(count, 0);
    if (total == 0) return out;

    const int64_t buckets = n_thresholds + 1;
    int64_t rank = 0;       // cumulative count walked so far
    auto it = distribution.begin();
    double last = 0;
    bool have_last = false;
    for (int j = 1; j <= n_thresholds; ++j) {
        int64_t target = (static_cast<int64_t>(j) * total + buckets - 1) / buckets;  // ceil
        target = std::clamp<int64_t>(target, 1, total);
        while (it != distribution.end() && rank + std::max<int64_t>(it->second, 0) < target) {
            rank += std::max<int64_t>(it->second, 0);
            ++it;
        }
        if (it == distribution.end()) break;
        if (!have_last || it->first != last) {
            Predicate p;
            p.attr = attr;
            p.op = Predicate::Op::LE;
            p.threshold = it->first;
            out.push_back(std::move(p));
            last = it->first;
            have_last = true;
        }
    }
    return out;
}

double regression_split_cost(const BranchStats &left, const BranchStats &right) {
    auto sse = [](const BranchStats &b) {
        return b.count <= 0 ? 0.0 : b.sum_sq - (b.sum * b.sum) / b.count;
    };
    return sse(left) + sse(right);
}

double gini_split_cost(const std::map<int32_t, int64_t> &left,
                       const std::map<int32_t, int64_t> &right) {
    auto impurity = [](const std::map<int32_t, int64_t> &counts) {
        double total = 0, sq = 0;
        for (const auto &[label, n] : counts) total += static_cast<double>(n);
        if (total <= 0) return 0.0;
        for (const auto &[label, n] : counts) sq += static_cast<double>(n) * static_cast<double>(n);
        return total - sq / total;  // c * (1 - sum p_k^2)
    };
    return impurity(left) + impurity(right);
}

SplitChoice cart_best_split(const std::vector<Predicate> &candidates,
                            const std::vector<BranchStats> &left_stats, const BranchStats &parent,
                            int64_t min_leaf) {
    SplitChoice best;
    double parent_cost =
        parent.count <= 0 ? 0.0 : parent.sum_sq - (parent.sum * parent.sum) / parent.count;
    double best_cost = parent_cost;  // must strictly improve
    for (size_t i = 0; i < candidates.size(); ++i) {
        const BranchStats &left = left_stats[i];
        BranchStats right{parent.count - left.count, parent.sum - left.sum,
                          parent.sum_sq - left.sum_sq};
        if (std::llround(left.count) < min_leaf || std::llround(right.count) < min_leaf) continue;
        double cost = regression_split_cost(left, right);
        if (cost < best_cost) {
            best_cost = cost;
            best.candidate = static_cast<int>(i);
            best.cost = cost;
            best.left = left;
            best.right = right;
        }
    }
    return best;
}

SplitChoice cart_best_split(const std::vector<Predicate> &candidates,
                            const std::vector<std::map<int32_t, int64_t>> &left_counts,
                            const std::map<int32_t, int64_t> &parent, int64_t min_leaf) {
    SplitChoice best;
    double parent_cost = gini_split_cost(parent, {});
    double best_cost = parent_cost;
    auto total = [](const std::map<int32_t, int64_t> &m) {
        int64_t t = 0;
        for (const auto &[label, n] : m) t += n;
        return t;
    };
    for (size_t i = 0; i < candidates.size(); ++i) {
        const auto &left = left_counts[i];
        std::map<int32_t, int64_t> right = parent;
        for (const auto &[label, n] : left) {
            right[label] -= n;
            if (right[label] == 0) right.erase(label);
        }
        if (total(left) < min_leaf || total(right) < min_leaf) continue;
        double cost = gini_split_cost(left, right);
        if (cost < best_cost) {
            best_cost = cost;
            best.candidate = static_cast<int>(i);
            best.cost = cost;
            best.left_counts = left;
            best.right_counts = std::move(right);
        }
    }
    return best;
}

namespace {

Predicate complement(Predicate p) {
    if (p.op == Predicate::Op::LE) {
        p.op = Predicate::Op::GT;
        return p;
    }
    if (p.op == Predicate::Op::GT) {
        p.op = Predicate::Op::LE;
        return p;
    }
    p.negate = !p.negate;
    return p;
}

int32_t majority_label(const std::map<int32_t, int64_t> &counts) {
    int32_t label = -1;
    int64_t best = -1;
    for (const auto &[k, n] : counts)
        if (n > best) {
            best = n;
            label = k;
        }
    return label;
}

struct Grower {
    const Catalog &db;
    const QuerySpec &query;
    const std::string &response;
    const CartParams &params;
    std::vector<Predicate> candidates;

    std::unique_ptr<DecisionTreeNode> grow_regression(const std::vector<Predicate> &pred,
                                                      int depth, const BranchStats &stats) {
        auto node = std::make_unique<DecisionTreeNode>();
        node->count = std::llround(stats.count);
        node->value = stats.sum / stats.count;
        if (depth >= params.max_depth || node->count < 2 * params.min_leaf) return node;

        auto batch = response_stats_batch(db, query, response, candidates, pred);
        SplitChoice choice = cart_best_split(
            candidates, {batch.begin() + 1, batch.end()}, stats, params.min_leaf);
        if (choice.candidate < 0) return node;

        node->split = candidates[choice.candidate];
        std::vector<Predicate> left_pred = pred, right_pred = pred;
        left_pred.push_back(*node->split);
        right_pred.push_back(complement(*node->split));
        node->left = grow_regression(left_pred, depth + 1, choice.left);
        node->right = grow_regression(right_pred, depth + 1, choice.right);
        return node;
    }

    std::unique_ptr<DecisionTreeNode> grow_classification(
        const std::vector<Predicate> &pred, int depth,
        const std::map<int32_t, int64_t> &counts) {
        auto node = std::make_unique<DecisionTreeNode>();
        for (const auto &[label, n] : counts) node->count += n;
        node->label = majority_label(counts);
        if (depth >= params.max_depth || node->count < 2 * params.min_leaf) return node;

        auto batch = class_counts_batch(db, query, response, candidates, pred);
        SplitChoice choice = cart_best_split(
            candidates, {batch.begin() + 1, batch.end()}, counts, params.min_leaf);
        if (choice.candidate < 0) return node;

        node->split = candidates[choice.candidate];
        std::vector<Predicate> left_pred = pred, right_pred = pred;
        left_pred.push_back(*node->split);
        right_pred.push_back(complement(*node->split));
        node->left = grow_classification(left_pred, depth + 1, choice.left_counts);
        node->right = grow_classification(right_pred, depth + 1, choice.right_counts);
        return node;
    }
};

}  // namespace

DecisionTree train_cart(const Catalog &db, const QuerySpec &query, const std::string &response,
                        const CartParams &params) {
    auto kind = db.attr_kind(response);
    if (!kind) throw Error(ErrorKind::UnsupportedQuery, "unknown response '" + response + "'");
    if (params.min_leaf < 1) throw Error(ErrorKind::Config, "min_leaf must be at least 1");
    if (params.max_depth < 0) throw Error(ErrorKind::Config, "max_depth must be non-negative");

    DecisionTree tree;
    tree.classification = (*kind == AttrKind::Categorical);
    tree.response = response;
    tree.params = params;

    Grower grower{db, query, response, params, {}};
    for (const auto &attr : query.features) {
        auto akind = db.attr_kind(attr);
        auto dist = attribute_distribution(db, query, attr);
        auto cands = candidates_for_attribute(attr, *akind, dist, params.n_thresholds);
        grower.candidates.insert(grower.candidates.end(), cands.begin(), cands.end());
    }

    if (tree.classification) {
        auto root_counts = class_counts_batch(db, query, response, {}, {})[0];
        int64_t total = 0;
        for (const auto &[label, n] : root_counts) total += n;
        if (total == 0)
            throw Error(ErrorKind::EmptyTrainingSet, "the join result has no tuples");
        tree.root = grower.grow_classification({}, 0, root_counts);
    } else {
        BranchStats root_stats = response_stats_batch(db, query, response, {}, {})[0];
        if (root_stats.count < 0.5)
            throw Error(ErrorKind::EmptyTrainingSet, "the join result has no tuples");
        tree.root = grower.grow_regression({}, 0, root_stats);
    }
    return tree;
}

}  // namespace factorml
