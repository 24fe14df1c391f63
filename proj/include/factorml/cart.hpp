#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "factorml/engine.hpp"

namespace factorml {

struct CartParams {
    int max_depth = 4;
    int64_t min_leaf = 2;
    int n_thresholds = 16;  // equi-depth quantile candidates per continuous attribute
};

struct DecisionTreeNode {
    std::optional<Predicate> split;  // set on internal nodes; left = satisfying branch
    std::unique_ptr<DecisionTreeNode> left, right;
    double value = 0.0;    // regression: mean response at the node
    int32_t label = -1;    // classification: majority class code
    int64_t count = 0;     // training tuples reaching the node

    bool is_leaf() const { return !split.has_value(); }
};

struct DecisionTree {
    bool classification = false;
    std::string response;
    CartParams params;
    std::unique_ptr<DecisionTreeNode> root;
};

/// Split candidates decided in advance from the full training set:
/// equi-depth quantile thresholds (x <= t) per continuous attribute and one
/// (x = category) candidate per observed category. Shared, purely
/// distributional rule so the aggregate-driven trainer and a
/// materialize-everything reference produce identical candidate lists.
std::vector<Predicate> candidates_for_attribute(const std::string &attr, AttrKind kind,
                                                const std::map<Value, int64_t> &distribution,
                                                int n_thresholds);

/// Weighted variance cost of a regression split: c_L*Var_L + c_R*Var_R with
/// Var = SQ/c - (S/c)^2 (so each term is SQ - S^2/c).
double regression_split_cost(const BranchStats &left, const BranchStats &right);

/// Weighted Gini cost of a classification split from per-class counts.
double gini_split_cost(const std::map<int32_t, int64_t> &left,
                       const std::map<int32_t, int64_t> &right);

struct SplitChoice {
    int candidate = -1;  // index into the candidate list; -1 = keep a leaf
    double cost = 0;
    BranchStats left, right;                    // regression branches
    std::map<int32_t, int64_t> left_counts, right_counts;  // classification branches
};

/// Picks the candidate with the lowest cost, with right-branch aggregates
/// obtained by subtraction from the parent. Candidates leaving a branch
/// below min_leaf are skipped; candidates that do not improve on the parent
/// cost yield the no-split signal. Ties resolve to the earliest candidate
/// (candidate lists are ordered by attribute, then threshold/category).
SplitChoice cart_best_split(const std::vector<Predicate> &candidates,
                            const std::vector<BranchStats> &left_stats, const BranchStats &parent,
                            int64_t min_leaf);
SplitChoice cart_best_split(const std::vector<Predicate> &candidates,
                            const std::vector<std::map<int32_t, int64_t>> &left_counts,
                            const std::map<int32_t, int64_t> &parent, int64_t min_leaf);

/// Greedy recursive CART over aggregates: every node's candidate costs come
/// from one shared factorized pass (split_cost_aggregates semantics); the
/// join is never materialized. Regression for a continuous response,
/// Gini classification for a categorical one.
DecisionTree train_cart(const Catalog &db, const QuerySpec &query, const std::string &response,
                        const CartParams &params);

}  // namespace factorml
