#include "factorml/engine.hpp"

#include <algorithm>

#include "factorml/join_tree.hpp"

namespace factorml {

namespace {

/// Slot-wise vector ring over a base ring; slot j of a product multiplies
/// slot j of both operands, so independent batch members never mix.
template <class Base>
struct BatchRing {
    using P = std::vector<typename Base::P>;
    Base base;
    int n = 1;

    P zero() const { return P(static_cast<size_t>(n), base.zero()); }
    P one() const { return P(static_cast<size_t>(n), base.one()); }
    P add(const P &a, const P &b) const {
        P out(a.size());
        for (size_t i = 0; i < a.size(); ++i) out[i] = base.add(a[i], b[i]);
        return out;
    }
    P mul(const P &a, const P &b) const {
        P out(a.size());
        for (size_t i = 0; i < a.size(); ++i) out[i] = base.mul(a[i], b[i]);
        return out;
    }
    P from_multiplicity(int64_t m) const {
        return P(static_cast<size_t>(n), base.from_multiplicity(m));
    }
    bool zeroish(const P &a) const {
        for (const auto &p : a)
            if (!base.zeroish(p)) return false;
        return true;
    }
    typename Base::P lift(const std::string &, Value) const { return base.one(); }
};

struct ResolvedPredicate {
    int cell = -1;
    const Predicate *pred = nullptr;
};

/// Pushes each predicate to the scan of the node that lifts its attribute
/// (the topmost node holding it), so every join tuple is filtered exactly
/// once per predicate.
std::vector<std::vector<std::vector<ResolvedPredicate>>> resolve_filters(
    const ViewPlan &plan, const std::vector<const std::vector<Predicate> *> &slots) {
    std::vector<std::vector<std::vector<ResolvedPredicate>>> out(plan.nodes.size());
    for (auto &per_node : out) per_node.resize(slots.size());
    for (size_t j = 0; j < slots.size(); ++j) {
        for (const Predicate &p : *slots[j]) {
            bool placed = false;
            for (size_t ni = 0; ni < plan.nodes.size() && !placed; ++ni) {
                for (const auto &[cell, attr] : plan.nodes[ni].lift_cells) {
                    if (attr == p.attr) {
                        out[ni][j].push_back({cell, &p});
                        placed = true;
                        break;
                    }
                }
            }
            if (!placed)
                throw Error(ErrorKind::UnsupportedQuery,
                            "filter attribute '" + p.attr + "' absent from query");
        }
    }
    return out;
}

template <class Base>
EvalOutput<std::vector<typename Base::P>> evaluate_filtered_batch(
    const ViewPlan &plan, const Catalog &db, const Base &base_ring,
    const std::vector<const std::vector<Predicate> *> &slots, OpCounter *external) {
    BatchRing<Base> ring{base_ring, static_cast<int>(slots.size())};
    auto filters = resolve_filters(plan, slots);
    OpCounter local;
    OpCounter &ops = external ? *external : local;
    return evaluate_views(
        plan, db, ring,
        [&](size_t ni, const Tuple &t, int64_t m) {
            auto single = lifted_tuple_payload(plan.nodes[ni], t, m, base_ring, ops);
            std::vector<typename Base::P> out(slots.size(), base_ring.zero());
            for (size_t j = 0; j < slots.size(); ++j) {
                bool pass = true;
                for (const auto &rp : filters[ni][j])
                    if (!rp.pred->matches(t[rp.cell])) {
                        pass = false;
                        break;
                    }
                if (pass) out[j] = single;
            }
            return out;
        },
        &ops);
}

const std::vector<Predicate> kNoPredicates;

}  // namespace

const char *predicate_op_name(Predicate::Op op) {
    switch (op) {
        case Predicate::Op::LE: return "<=";
        case Predicate::Op::GT: return ">";
        case Predicate::Op::EQ: return "=";
        case Predicate::Op::IN: return "in";
    }
    return "?";
}

SigmaResult sigma(const Catalog &db, const QuerySpec &query) {
    SigmaResult result;
    result.spec = make_lift_spec(query, db);
    JoinTree tree = gyo_join_tree(query, db);
    ViewPlan plan = compile_view_plan(tree, db, {});
    CovarianceRing ring{result.spec};
    OpCounter ops;
    auto out = evaluate_views(plan, db, ring, &ops);
    const auto &root = out.views.back();
    auto it = root.find(Tuple{});
    result.payload = it == root.end() ? cov_zero() : it->second;
    if (query.intercept && !detail::exact_zero(result.payload)) {
        result.payload = times(result.payload, lift_intercept(result.spec));
        ops.add_times();
    }
    result.ops = ops.snapshot();
    return result;
}

GroupCounts group_by_counts(const Catalog &db, const QuerySpec &query,
                            const std::vector<std::string> &attrs, OpCounts *ops_out) {
    if (attrs.empty() || attrs.size() > 2)
        throw Error(ErrorKind::UnsupportedQuery, "group_by_counts takes 1 or 2 attributes");
    for (const auto &a : attrs) {
        auto kind = db.attr_kind(a);
        if (!kind) throw Error(ErrorKind::UnsupportedQuery, "unknown attribute '" + a + "'");
        if (*kind != AttrKind::Categorical)
            throw Error(ErrorKind::Type, "group-by attribute '" + a + "' is not categorical");
    }

    if (attrs.size() == 2 && attrs[0] == attrs[1]) {
        GroupCounts single = group_by_counts(db, query, {attrs[0]}, ops_out);
        GroupCounts diag;
        for (const auto &[k, n] : single) diag[{k[0], k[0]}] = n;
        return diag;
    }

    std::set<std::string> gb(attrs.begin(), attrs.end());
    JoinTree tree = gyo_join_tree(query, db);
    ViewPlan plan = compile_view_plan(tree, db, gb);
    OpCounter ops;
    auto root = evaluate(plan, db, CountingRing{}, &ops);

    // root keys are in sorted attribute order; remap to the requested order
    std::vector<int> pos;
    for (const auto &a : attrs) {
        auto it = std::find(plan.root_key_attrs.begin(), plan.root_key_attrs.end(), a);
        pos.push_back(static_cast<int>(it - plan.root_key_attrs.begin()));
    }
    GroupCounts out;
    for (const auto &[key, payload] : root) {
        GroupKey gk(attrs.size());
        for (size_t i = 0; i < attrs.size(); ++i) gk[i] = static_cast<uint32_t>(key[pos[i]]);
        out[gk] = payload.value;
    }
    if (ops_out) *ops_out = ops.snapshot();
    return out;
}

std::vector<BranchStats> response_stats_batch(const Catalog &db, const QuerySpec &query,
                                              const std::string &response,
                                              const std::vector<Predicate> &candidates,
                                              const std::vector<Predicate> &node_predicate,
                                              OpCounts *ops_out) {
    auto kind = db.attr_kind(response);
    if (!kind || *kind != AttrKind::Continuous)
        throw Error(ErrorKind::Type, "response '" + response + "' must be continuous");

    QuerySpec stats_query;
    stats_query.relations = query.relations;
    stats_query.response = response;
    LiftSpec spec = make_lift_spec(stats_query, db);
    FeatureKey y{0, -1};

    JoinTree tree = gyo_join_tree(stats_query, db);
    ViewPlan plan = compile_view_plan(tree, db, {});

    // slot 0: node predicate alone; slot i+1: node predicate AND candidate i
    std::vector<std::vector<Predicate>> conj(candidates.size());
    std::vector<const std::vector<Predicate> *> slots;
    slots.push_back(&node_predicate);
    for (size_t i = 0; i < candidates.size(); ++i) {
        conj[i] = node_predicate;
        conj[i].push_back(candidates[i]);
        slots.push_back(&conj[i]);
    }

    OpCounter ops;
    CovarianceRing base{spec};
    auto out = evaluate_filtered_batch(plan, db, base, slots, &ops);
    const auto &root = out.views.back();
    auto it = root.find(Tuple{});

    std::vector<BranchStats> stats(slots.size());
    if (it != root.end()) {
        for (size_t j = 0; j < slots.size(); ++j) {
            const CovariancePayload &p = it->second[j];
            stats[j] = {p.c, p.s_at(y), p.q_at(y, y)};
        }
    }
    if (ops_out) *ops_out = ops.snapshot();
    return stats;
}

std::vector<BranchStats> split_cost_aggregates(const Catalog &db, const QuerySpec &query,
                                               const std::string &response,
                                               const std::vector<Predicate> &candidates,
                                               const std::vector<Predicate> &node_predicate,
                                               OpCounts *ops) {
    auto batch = response_stats_batch(db, query, response, candidates, node_predicate, ops);
    return {batch.begin() + 1, batch.end()};
}

std::vector<std::map<int32_t, int64_t>> class_counts_batch(
    const Catalog &db, const QuerySpec &query, const std::string &response,
    const std::vector<Predicate> &candidates, const std::vector<Predicate> &node_predicate,
    OpCounts *ops_out) {
    auto kind = db.attr_kind(response);
    if (!kind || *kind != AttrKind::Categorical)
        throw Error(ErrorKind::Type, "class response '" + response + "' must be categorical");

    QuerySpec counts_query;
    counts_query.relations = query.relations;
    JoinTree tree = gyo_join_tree(counts_query, db);
    ViewPlan plan = compile_view_plan(tree, db, {response});

    std::vector<std::vector<Predicate>> conj(candidates.size());
    std::vector<const std::vector<Predicate> *> slots;
    slots.push_back(&node_predicate);
    for (size_t i = 0; i < candidates.size(); ++i) {
        conj[i] = node_predicate;
        conj[i].push_back(candidates[i]);
        slots.push_back(&conj[i]);
    }

    OpCounter ops;
    auto out = evaluate_filtered_batch(plan, db, CountingRing{}, slots, &ops);

    std::vector<std::map<int32_t, int64_t>> counts(slots.size());
    for (const auto &[key, payloads] : out.views.back()) {
        auto code = static_cast<int32_t>(key[0]);
        for (size_t j = 0; j < slots.size(); ++j)
            if (payloads[j].value != 0) counts[j][code] += payloads[j].value;
    }
    if (ops_out) *ops_out = ops.snapshot();
    return counts;
}

std::map<Value, int64_t> attribute_distribution(const Catalog &db, const QuerySpec &query,
                                                const std::string &attr, OpCounts *ops_out) {
    QuerySpec dist_query;
    dist_query.relations = query.relations;
    JoinTree tree = gyo_join_tree(dist_query, db);
    ViewPlan plan = compile_view_plan(tree, db, {attr});
    OpCounter ops;
    auto root = evaluate(plan, db, CountingRing{}, &ops);
    std::map<Value, int64_t> out;
    for (const auto &[key, payload] : root) out[key[0]] = payload.value;
    if (ops_out) *ops_out = ops.snapshot();
    return out;
}

// ---------------------------------------------------------------------------
// Structure-agnostic baseline
// ---------------------------------------------------------------------------

MaterializedJoin naive_join(const Catalog &db, const QuerySpec &query, uint64_t cap,
                            OpCounts *ops) {
    validate_query(query, db);
    std::vector<std::string> rels = query.relations;
    std::sort(rels.begin(), rels.end());

    MaterializedJoin acc;
    bool first = true;
    for (const auto &rname : rels) {
        const Relation &rel = db.relation(rname);
        if (first) {
            for (const auto &a : rel.schema) acc.attrs.push_back(a.name);
            for (const auto &[t, m] : rel.data) {
                acc.rows.push_back(t);
                acc.mults.push_back(m);
                acc.tuple_count += static_cast<uint64_t>(m < 0 ? -m : m);
                if (acc.tuple_count > cap)
                    throw Error(ErrorKind::Resource,
                                "materialization cap exceeded (" + std::to_string(cap) + ")");
            }
            first = false;
            continue;
        }

        // shared attributes and the new columns this relation contributes
        std::vector<int> shared_acc, shared_rel, fresh_rel;
        for (size_t i = 0; i < rel.schema.size(); ++i) {
            int j = acc.attr_index(rel.schema[i].name);
            if (j >= 0) {
                shared_acc.push_back(j);
                shared_rel.push_back(static_cast<int>(i));
            } else {
                fresh_rel.push_back(static_cast<int>(i));
            }
        }

        std::map<Tuple, std::vector<std::pair<const Tuple *, int64_t>>> index;
        for (const auto &[t, m] : rel.data) {
            Tuple key(shared_rel.size());
            for (size_t k = 0; k < shared_rel.size(); ++k) key[k] = t[shared_rel[k]];
            index[key].push_back({&t, m});
        }

        MaterializedJoin next;
        next.attrs = acc.attrs;
        for (int f : fresh_rel) next.attrs.push_back(rel.schema[f].name);
        for (size_t r = 0; r < acc.rows.size(); ++r) {
            Tuple key(shared_acc.size());
            for (size_t k = 0; k < shared_acc.size(); ++k) key[k] = acc.rows[r][shared_acc[k]];
            auto it = index.find(key);
            if (it == index.end()) continue;
            for (const auto &[t, m] : it->second) {
                Tuple row = acc.rows[r];
                for (int f : fresh_rel) row.push_back((*t)[f]);
                int64_t mult = acc.mults[r] * m;
                if (mult == 0) continue;
                next.rows.push_back(std::move(row));
                next.mults.push_back(mult);
                next.tuple_count += static_cast<uint64_t>(mult < 0 ? -mult : mult);
                if (next.tuple_count > cap)
                    throw Error(ErrorKind::Resource,
                                "materialization cap exceeded (" + std::to_string(cap) + ")");
            }
        }
        acc = std::move(next);
    }
    if (ops) ops->materialized_tuples += acc.tuple_count;
    return acc;
}

namespace {

/// Per-row feature value and key under a lift spec: continuous features
/// contribute their value, categorical features contribute 1 at the
/// category's key, the intercept contributes a constant 1.
struct RowFeature {
    int column = -1;  // -1 for the intercept
    AttrKind kind = AttrKind::Continuous;
};

std::vector<RowFeature> bind_features(const LiftSpec &spec, const MaterializedJoin &join) {
    std::vector<RowFeature> out;
    for (const auto &f : spec.features) {
        RowFeature rf;
        if (!f.is_intercept) {
            rf.column = join.attr_index(f.source_attr);
            if (rf.column < 0)
                throw Error(ErrorKind::Internal, "feature column missing from join result");
            rf.kind = f.kind;
        }
        out.push_back(rf);
    }
    return out;
}

}  // namespace

CovariancePayload naive_sigma(const Catalog &db, const QuerySpec &query, uint64_t cap,
                              OpCounts *ops) {
    LiftSpec spec = make_lift_spec(query, db);
    MaterializedJoin join = naive_join(db, query, cap, ops);
    auto features = bind_features(spec, join);

    CovariancePayload out;
    std::vector<FeatureKey> keys(features.size());
    std::vector<double> vals(features.size());
    for (size_t r = 0; r < join.rows.size(); ++r) {
        double m = static_cast<double>(join.mults[r]);
        out.c += m;
        for (size_t i = 0; i < features.size(); ++i) {
            if (features[i].column < 0) {
                keys[i] = {static_cast<int32_t>(i), -1};
                vals[i] = 1.0;
            } else {
                Value v = join.rows[r][features[i].column];
                keys[i] = spec.key_for(static_cast<int>(i), v);
                vals[i] = features[i].kind == AttrKind::Categorical ? 1.0 : v;
            }
        }
        for (size_t i = 0; i < features.size(); ++i) {
            sparse_add(out.s, keys[i], m * vals[i]);
            for (size_t j = i; j < features.size(); ++j)
                sparse_add(out.q, KeyPair(keys[i], keys[j]), m * vals[i] * vals[j]);
        }
    }
    return out;
}

GroupCounts naive_group_by_counts(const Catalog &db, const QuerySpec &query,
                                  const std::vector<std::string> &attrs, uint64_t cap,
                                  OpCounts *ops) {
    for (const auto &a : attrs) {
        auto kind = db.attr_kind(a);
        if (!kind || *kind != AttrKind::Categorical)
            throw Error(ErrorKind::Type, "group-by attribute '" + a + "' is not categorical");
    }
    MaterializedJoin join = naive_join(db, query, cap, ops);
    std::vector<int> cols;
    for (const auto &a : attrs) cols.push_back(join.attr_index(a));

    GroupCounts out;
    for (size_t r = 0; r < join.rows.size(); ++r) {
        GroupKey key(cols.size());
        for (size_t i = 0; i < cols.size(); ++i)
            key[i] = static_cast<uint32_t>(join.rows[r][cols[i]]);
        out[key] += join.mults[r];
    }
    std::erase_if(out, [](const auto &e) { return e.second == 0; });
    return out;
}

std::vector<BranchStats> naive_split_cost_aggregates(const Catalog &db, const QuerySpec &query,
                                                     const std::string &response,
                                                     const std::vector<Predicate> &candidates,
                                                     const std::vector<Predicate> &node_predicate,
                                                     uint64_t cap, OpCounts *ops) {
    MaterializedJoin join = naive_join(db, query, cap, ops);
    int ycol = join.attr_index(response);
    if (ycol < 0)
        throw Error(ErrorKind::UnsupportedQuery, "response '" + response + "' not in join result");

    std::vector<int> pred_cols, cand_cols;
    for (const auto &p : node_predicate) {
        int c = join.attr_index(p.attr);
        if (c < 0)
            throw Error(ErrorKind::UnsupportedQuery, "filter attribute '" + p.attr + "' absent from query");
        pred_cols.push_back(c);
    }
    for (const auto &p : candidates) {
        int c = join.attr_index(p.attr);
        if (c < 0)
            throw Error(ErrorKind::UnsupportedQuery, "filter attribute '" + p.attr + "' absent from query");
        cand_cols.push_back(c);
    }

    std::vector<BranchStats> out(candidates.size());
    for (size_t r = 0; r < join.rows.size(); ++r) {
        bool node_ok = true;
        for (size_t i = 0; i < node_predicate.size(); ++i)
            if (!node_predicate[i].matches(join.rows[r][pred_cols[i]])) {
                node_ok = false;
                break;
            }
        if (!node_ok) continue;
        double m = static_cast<double>(join.mults[r]);
        double y = join.rows[r][ycol];
        for (size_t i = 0; i < candidates.size(); ++i) {
            if (!candidates[i].matches(join.rows[r][cand_cols[i]])) continue;
            out[i].count += m;
            out[i].sum += m * y;
            out[i].sum_sq += m * y * y;
        }
    }
    return out;
}

}  // namespace factorml
