#pragma once

#include <string>
#include <vector>

#include "factorml/engine.hpp"
#include "factorml/join_tree.hpp"

namespace factorml {

/// A database snapshot plus every view of its plan, kept equal to what
/// from-scratch evaluation would produce on the current snapshot. Deltas
/// are lifted payloads (negated for deletes) merged at the owning node and
/// propagated along the node-to-root path, re-combining only entries whose
/// key matches the changed child key; sibling views are probed, never
/// rebuilt.
///
/// Single writer: updates are strictly serialized. Root reads between
/// updates are safe from any thread.
template <class Ring>
class MaterializedState {
  public:
    using P = typename Ring::P;

    MaterializedState(Catalog db, QuerySpec query, Ring ring)
        : db_(std::move(db)), query_(std::move(query)), ring_(std::move(ring)) {
        tree_ = gyo_join_tree(query_, db_);
        plan_ = compile_view_plan(tree_, db_, {});
        rebuild();
    }

    const Catalog &db() const { return db_; }
    const QuerySpec &query() const { return query_; }
    const ViewPlan &plan() const { return plan_; }
    const Ring &ring() const { return ring_; }
    const std::vector<View<P>> &views() const { return views_; }
    const View<P> &view(size_t plan_node) const { return views_[plan_node]; }
    const std::vector<std::string> &warnings() const { return warnings_; }
    uint64_t events_applied() const { return events_applied_; }

    /// Full re-materialization happens every this many events to bound
    /// float drift under long streams; the default is effectively off at
    /// desk scale.
    void set_rematerialize_every(uint64_t k) { rematerialize_every_ = k; }

    /// Root aggregate (empty group-by), zero when the join is empty. O(1).
    P root_payload() const {
        const auto &root = views_.back();
        auto it = root.find(Tuple{});
        return it == root.end() ? ring_.zero() : it->second;
    }

    /// Applies one insert/delete. Events on relations outside the query are
    /// no-ops. Returns the net change to the root payload.
    P apply_update(const UpdateEvent &ev);

    /// Removes zero payloads (under the compaction threshold) from every
    /// view and prunes zero components inside payloads.
    void compact() {
        for (auto &view : views_) {
            for (auto &[key, payload] : view) payload = compacted(payload);
            std::erase_if(view, [&](const auto &e) { return ring_.zeroish(e.second); });
        }
    }

    /// Drops all views and recomputes them from the snapshot.
    void rebuild() {
        auto out = evaluate_views(plan_, db_, ring_, &ops_);
        views_ = std::move(out.views);
    }

    OpCounts ops() const { return ops_.snapshot(); }

  private:
    Catalog db_;
    QuerySpec query_;
    Ring ring_;
    JoinTree tree_;
    ViewPlan plan_;
    std::vector<View<P>> views_;
    std::vector<std::string> warnings_;
    OpCounter ops_;
    uint64_t events_applied_ = 0;
    uint64_t rematerialize_every_ = 1'000'000;

    void merge_delta(View<P> &target, const Tuple &key, const P &payload) {
        auto [it, inserted] = target.try_emplace(key, ring_.zero());
        it->second = ring_.add(it->second, payload);
        ops_.add_plus();
        if (ring_.zeroish(it->second)) target.erase(it);
    }
};

template <class Ring>
typename Ring::P MaterializedState<Ring>::apply_update(const UpdateEvent &ev) {
    ++events_applied_;
    int ni = plan_.plan_node_of(ev.relation);
    if (ni < 0) return ring_.zero();  // relation not in the query: no-op

    Relation &rel = db_.relation(ev.relation);
    if (ev.tuple.size() != rel.arity())
        throw Error(ErrorKind::Ingestion, "update arity mismatch for relation " + ev.relation);
    Tuple tuple(ev.tuple.size());
    for (size_t i = 0; i < tuple.size(); ++i) tuple[i] = canonical(ev.tuple[i]);

    // delta contributions of the single tuple at its owning node
    View<P> delta;
    {
        P base = lifted_tuple_payload(plan_.nodes[ni], tuple, ev.sign, ring_, ops_);
        detail::combine_tuple(plan_.nodes[ni], tuple, base, views_, ring_, ops_,
                              /*override_child=*/-1, nullptr, nullptr,
                              [&](const Tuple &key, const P &payload) {
                                  auto [it, inserted] = delta.try_emplace(key, ring_.zero());
                                  it->second = ring_.add(it->second, payload);
                                  ops_.add_plus();
                              });
    }

    // update the snapshot (after computing the delta: the delta joins the
    // tuple against sibling views of the pre-update state, which the tuple's
    // own relation is not part of)
    rel.add(tuple, ev.sign);
    if (rel.data.count(tuple) && rel.data.at(tuple) < 0)
        warnings_.push_back("relation " + ev.relation +
                            ": tuple multiplicity is negative after delete");

    for (const auto &[key, payload] : delta) merge_delta(views_[ni], key, payload);

    // propagate along the path to the root; at each ancestor only tuples
    // matching the changed child keys are re-combined
    int child = ni;
    while (child != static_cast<int>(plan_.nodes.size()) - 1 && !delta.empty()) {
        // find the parent plan node and this child's slot in it
        int parent = -1, slot = -1;
        for (size_t pi = 0; pi < plan_.nodes.size() && parent < 0; ++pi)
            for (size_t ci = 0; ci < plan_.nodes[pi].children.size(); ++ci)
                if (plan_.nodes[pi].children[ci].plan_node == child) {
                    parent = static_cast<int>(pi);
                    slot = static_cast<int>(ci);
                    break;
                }
        if (parent < 0) throw Error(ErrorKind::Internal, "plan node has no parent");

        const PlanNode &pnode = plan_.nodes[parent];
        const Relation &prel = db_.relation(pnode.relation);
        const auto &probe_cells = pnode.children[slot].probe_cells;
        View<P> parent_delta;
        for (const auto &[dkey, dpayload] : delta) {
            for (const auto &[tuple2, mult2] : prel.data) {
                bool matches = true;
                for (size_t k = 0; k < probe_cells.size(); ++k)
                    if (tuple2[probe_cells[k]] != dkey[k]) {
                        matches = false;
                        break;
                    }
                if (!matches) continue;
                P base = lifted_tuple_payload(pnode, tuple2, mult2, ring_, ops_);
                detail::combine_tuple(pnode, tuple2, base, views_, ring_, ops_, slot, &dkey,
                                      &dpayload, [&](const Tuple &key, const P &payload) {
                                          auto [it, inserted] =
                                              parent_delta.try_emplace(key, ring_.zero());
                                          it->second = ring_.add(it->second, payload);
                                          ops_.add_plus();
                                      });
            }
        }
        std::erase_if(parent_delta,
                      [&](const auto &e) { return detail::exact_zero(e.second); });
        for (const auto &[key, payload] : parent_delta) merge_delta(views_[parent], key, payload);
        delta = std::move(parent_delta);
        child = parent;
    }

    typename Ring::P root_delta = ring_.zero();
    if (child == static_cast<int>(plan_.nodes.size()) - 1) {
        auto it = delta.find(Tuple{});
        if (it != delta.end()) root_delta = it->second;
    }
    if (rematerialize_every_ > 0 && events_applied_ % rematerialize_every_ == 0) {
        compact();
        rebuild();
    }
    return root_delta;
}

/// Builds a materialized state from scratch.
template <class Ring>
MaterializedState<Ring> materialize(const Catalog &db, const QuerySpec &query, Ring ring) {
    return MaterializedState<Ring>(db, query, std::move(ring));
}

}  // namespace factorml
