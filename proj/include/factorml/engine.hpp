#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "factorml/plan.hpp"
#include "factorml/ring.hpp"

namespace factorml {

// ---------------------------------------------------------------------------
// Instrumentation
// ---------------------------------------------------------------------------

struct OpCounts {
    uint64_t plus = 0;
    uint64_t times = 0;
    uint64_t lifts = 0;
    uint64_t view_entries = 0;
    uint64_t materialized_tuples = 0;  // structure-agnostic path only

    uint64_t ring_ops() const { return plus + times + lifts; }
};

/// Totals-only counter; increments may race, reads between evaluations are
/// consistent.
class OpCounter {
  public:
    void add_plus(uint64_t n = 1) { plus_.fetch_add(n, std::memory_order_relaxed); }
    void add_times(uint64_t n = 1) { times_.fetch_add(n, std::memory_order_relaxed); }
    void add_lifts(uint64_t n = 1) { lifts_.fetch_add(n, std::memory_order_relaxed); }
    void add_view_entries(uint64_t n) { entries_.fetch_add(n, std::memory_order_relaxed); }
    void add_materialized(uint64_t n) { mat_.fetch_add(n, std::memory_order_relaxed); }

    OpCounts snapshot() const {
        return {plus_.load(), times_.load(), lifts_.load(), entries_.load(), mat_.load()};
    }

  private:
    std::atomic<uint64_t> plus_{0}, times_{0}, lifts_{0}, entries_{0}, mat_{0};
};

// ---------------------------------------------------------------------------
// Views and the bottom-up evaluator
// ---------------------------------------------------------------------------

/// Ring-valued view: key tuple (retained attribute values) -> payload.
/// Ordered map so iteration (and so float summation) is key-sorted.
template <class P>
using View = std::map<Tuple, P>;

namespace detail {

inline bool exact_zero(const CovariancePayload &p) {
    return p.c == 0.0 && p.s.empty() && p.q.empty();
}
inline bool exact_zero(const CountPayload &p) { return p.value == 0; }
template <class P>
bool exact_zero(const std::vector<P> &v) {
    for (const auto &p : v)
        if (!exact_zero(p)) return false;
    return true;
}

inline bool exact_one(const CovariancePayload &p) {
    return p.c == 1.0 && p.s.empty() && p.q.empty();
}
inline bool exact_one(const CountPayload &p) { return p.value == 1; }

/// Emits every contribution of one tuple of `node`, i.e. the tuple's own
/// payload times one matching payload per child view, keyed by the node's
/// retained attributes. Child views are probed by label prefix; children
/// with extra (group-by) key parts fan out into a cross product.
///
/// When `override_child >= 0`, that child's view is replaced by the single
/// entry (override_key -> override_payload); this is the delta-propagation
/// step of incremental maintenance, where exactly one child changed.
template <class Ring, class EmitFn>
void combine_tuple(const PlanNode &node, const Tuple &tuple,
                   const typename Ring::P &own_payload,
                   const std::vector<View<typename Ring::P>> &views, const Ring &ring,
                   OpCounter &ops, int override_child, const Tuple *override_key,
                   const typename Ring::P *override_payload, EmitFn &&emit) {
    using P = typename Ring::P;

    Tuple key(node.key_attrs.size());
    for (size_t kp = 0; kp < node.key_sources.size(); ++kp)
        if (node.key_sources[kp].own_cell >= 0) key[kp] = tuple[node.key_sources[kp].own_cell];

    auto recurse = [&](auto &&self, size_t child_i, const P &acc) -> void {
        if (child_i == node.children.size()) {
            emit(key, acc);
            return;
        }
        const auto &ref = node.children[child_i];

        Tuple probe(ref.probe_cells.size());
        for (size_t k = 0; k < ref.probe_cells.size(); ++k) probe[k] = tuple[ref.probe_cells[k]];

        if (static_cast<int>(child_i) == override_child) {
            // the changed child: match the label prefix of the overriding key
            for (size_t k = 0; k < probe.size(); ++k)
                if ((*override_key)[k] != probe[k]) return;
            for (int e = 0; e < ref.n_extras; ++e)
                key[ref.extra_targets[e]] = (*override_key)[ref.probe_cells.size() + e];
            P nxt = ring.mul(acc, *override_payload);
            ops.add_times();
            if (exact_zero(nxt)) return;
            self(self, child_i + 1, nxt);
            return;
        }

        const View<P> &cview = views[ref.plan_node];
        if (ref.n_extras == 0) {
            auto it = cview.find(probe);
            if (it == cview.end()) return;
            P nxt = ring.mul(acc, it->second);
            ops.add_times();
            if (exact_zero(nxt)) return;
            self(self, child_i + 1, nxt);
            return;
        }
        for (auto it = cview.lower_bound(probe); it != cview.end(); ++it) {
            bool prefix = true;
            for (size_t k = 0; k < probe.size(); ++k)
                if (it->first[k] != probe[k]) {
                    prefix = false;
                    break;
                }
            if (!prefix) break;
            for (int e = 0; e < ref.n_extras; ++e)
                key[ref.extra_targets[e]] = it->first[probe.size() + e];
            P nxt = ring.mul(acc, it->second);
            ops.add_times();
            if (!exact_zero(nxt)) self(self, child_i + 1, nxt);
        }
    };
    recurse(recurse, 0, own_payload);
}

}  // namespace detail

/// Per-tuple payload of the default evaluator: multiplicity times the lift
/// of every own attribute. Trivial lifts (ring one) are skipped.
template <class Ring>
typename Ring::P lifted_tuple_payload(const PlanNode &node, const Tuple &tuple, int64_t mult,
                                      const Ring &ring, OpCounter &ops) {
    typename Ring::P base = ring.from_multiplicity(mult);
    for (const auto &[cell, attr] : node.lift_cells) {
        auto lifted = ring.lift(attr, tuple[cell]);
        if (detail::exact_one(lifted)) continue;
        ops.add_lifts();
        base = ring.mul(base, lifted);
        ops.add_times();
    }
    return base;
}

template <class P>
struct EvalOutput {
    std::vector<View<P>> views;  // per plan node, post order
    OpCounts ops;

    const View<P> &root() const { return views.back(); }
};

/// Bottom-up factorized evaluation of every view in the plan. `own` maps
/// (plan node index, tuple, multiplicity) to the tuple's own payload; the
/// default is lifted_tuple_payload. Deterministic: relations and views are
/// scanned in sorted key order.
template <class Ring, class OwnFn>
EvalOutput<typename Ring::P> evaluate_views(const ViewPlan &plan, const Catalog &db,
                                            const Ring &ring, OwnFn &&own,
                                            OpCounter *external = nullptr) {
    using P = typename Ring::P;
    OpCounter local;
    OpCounter &ops = external ? *external : local;

    EvalOutput<P> out;
    out.views.resize(plan.nodes.size());
    for (size_t ni = 0; ni < plan.nodes.size(); ++ni) {
        const PlanNode &node = plan.nodes[ni];
        const Relation &rel = db.relation(node.relation);
        View<P> &view = out.views[ni];

        for (const auto &[tuple, mult] : rel.data) {
            P base = own(ni, tuple, mult);
            if (detail::exact_zero(base)) continue;
            detail::combine_tuple(node, tuple, base, out.views, ring, ops,
                                  /*override_child=*/-1, nullptr, nullptr,
                                  [&](const Tuple &key, const P &payload) {
                                      auto [it, inserted] = view.try_emplace(key, ring.zero());
                                      it->second = ring.add(it->second, payload);
                                      ops.add_plus();
                                  });
        }
        std::erase_if(view, [&](const auto &e) { return ring.zeroish(e.second); });
        ops.add_view_entries(view.size());
    }
    out.ops = ops.snapshot();
    return out;
}

template <class Ring>
EvalOutput<typename Ring::P> evaluate_views(const ViewPlan &plan, const Catalog &db,
                                            const Ring &ring, OpCounter *external = nullptr) {
    OpCounter local;
    OpCounter &ops = external ? *external : local;
    return evaluate_views(
        plan, db, ring,
        [&](size_t ni, const Tuple &t, int64_t m) {
            return lifted_tuple_payload(plan.nodes[ni], t, m, ring, ops);
        },
        &ops);
}

/// Root view of a factorized evaluation.
template <class Ring>
View<typename Ring::P> evaluate(const ViewPlan &plan, const Catalog &db, const Ring &ring,
                                OpCounter *ops = nullptr) {
    return evaluate_views(plan, db, ring, ops).views.back();
}

// ---------------------------------------------------------------------------
// Filters (CART split predicates, pushed to the owning node's scan)
// ---------------------------------------------------------------------------

struct Predicate {
    enum class Op { LE, GT, EQ, IN };

    std::string attr;
    Op op = Op::LE;
    double threshold = 0.0;
    std::vector<int32_t> categories;  // EQ: one entry; IN: sorted set
    bool negate = false;              // internal: complement branch of a split

    bool matches(Value v) const {
        bool hit = false;
        switch (op) {
            case Op::LE: hit = v <= threshold; break;
            case Op::GT: hit = v > threshold; break;
            case Op::EQ: hit = static_cast<int32_t>(v) == categories.front(); break;
            case Op::IN:
                hit = std::binary_search(categories.begin(), categories.end(),
                                         static_cast<int32_t>(v));
                break;
        }
        return negate ? !hit : hit;
    }
};

const char *predicate_op_name(Predicate::Op op);

// ---------------------------------------------------------------------------
// Aggregate operations over a query (factorized path)
// ---------------------------------------------------------------------------

struct SigmaResult {
    CovariancePayload payload;
    LiftSpec spec;
    OpCounts ops;
};

/// All degree<=2 statistics of the join result in one payload: compile +
/// evaluate over the covariance ring with empty group-by; the intercept
/// (when requested) is folded in as a constant-1 feature.
SigmaResult sigma(const Catalog &db, const QuerySpec &query);

using GroupKey = std::vector<uint32_t>;
using GroupCounts = std::map<GroupKey, int64_t>;

/// Join-result counts grouped by one or two categorical attributes,
/// computed factorized over the counting ring.
GroupCounts group_by_counts(const Catalog &db, const QuerySpec &query,
                            const std::vector<std::string> &attrs, OpCounts *ops = nullptr);

struct BranchStats {
    double count = 0, sum = 0, sum_sq = 0;  // c, sum(y), sum(y^2)
};

/// Count / sum(y) / sum(y^2) over join tuples satisfying the node predicate
/// and each candidate, all candidates evaluated in one shared pass with
/// per-candidate payload slots. Index 0 of the result is the node itself
/// (vacuous candidate); index i+1 is candidates[i].
std::vector<BranchStats> response_stats_batch(const Catalog &db, const QuerySpec &query,
                                              const std::string &response,
                                              const std::vector<Predicate> &candidates,
                                              const std::vector<Predicate> &node_predicate,
                                              OpCounts *ops = nullptr);

/// The same batch without the leading node slot.
std::vector<BranchStats> split_cost_aggregates(const Catalog &db, const QuerySpec &query,
                                               const std::string &response,
                                               const std::vector<Predicate> &candidates,
                                               const std::vector<Predicate> &node_predicate,
                                               OpCounts *ops = nullptr);

/// Per-class counts (categorical response) under the node predicate and
/// each candidate; slot layout as in response_stats_batch.
std::vector<std::map<int32_t, int64_t>> class_counts_batch(
    const Catalog &db, const QuerySpec &query, const std::string &response,
    const std::vector<Predicate> &candidates, const std::vector<Predicate> &node_predicate,
    OpCounts *ops = nullptr);

/// Join-result distribution of one attribute (value -> count), factorized;
/// feeds equi-depth threshold generation.
std::map<Value, int64_t> attribute_distribution(const Catalog &db, const QuerySpec &query,
                                                const std::string &attr, OpCounts *ops = nullptr);

// ---------------------------------------------------------------------------
// Structure-agnostic baseline (materialize, then aggregate directly)
// ---------------------------------------------------------------------------

inline constexpr uint64_t kDefaultMaterializeCap = 20'000'000;

/// The flat materialized join result. Rows carry multiplicities; the
/// materialized tuple count is the bag-semantics size (sum of
/// multiplicities).
struct MaterializedJoin {
    std::vector<std::string> attrs;
    std::vector<Tuple> rows;
    std::vector<int64_t> mults;
    uint64_t tuple_count = 0;

    int attr_index(const std::string &a) const {
        for (size_t i = 0; i < attrs.size(); ++i)
            if (attrs[i] == a) return static_cast<int>(i);
        return -1;
    }
};

/// Materializes the full natural join by folding hash joins over the
/// query's relations in sorted name order. Exceeding the cap (on any
/// intermediate or the result) raises a resource error.
MaterializedJoin naive_join(const Catalog &db, const QuerySpec &query,
                            uint64_t cap = kDefaultMaterializeCap, OpCounts *ops = nullptr);

/// Baseline counterparts computed by direct iteration over the
/// materialized join. These never touch the ring operations; they are the
/// oracle for the factorized path.
CovariancePayload naive_sigma(const Catalog &db, const QuerySpec &query,
                              uint64_t cap = kDefaultMaterializeCap, OpCounts *ops = nullptr);
GroupCounts naive_group_by_counts(const Catalog &db, const QuerySpec &query,
                                  const std::vector<std::string> &attrs,
                                  uint64_t cap = kDefaultMaterializeCap, OpCounts *ops = nullptr);
std::vector<BranchStats> naive_split_cost_aggregates(const Catalog &db, const QuerySpec &query,
                                                     const std::string &response,
                                                     const std::vector<Predicate> &candidates,
                                                     const std::vector<Predicate> &node_predicate,
                                                     uint64_t cap = kDefaultMaterializeCap,
                                                     OpCounts *ops = nullptr);

}  // namespace factorml
