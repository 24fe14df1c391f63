#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "factorml/relation.hpp"

namespace factorml {

/// Magnitude below which a payload component counts as zero (compaction
/// threshold under long insert/delete streams).
inline constexpr double kEpsZero = 1e-12;

// ---------------------------------------------------------------------------
// Feature keys
// ---------------------------------------------------------------------------

/// Index of the feature inside a LiftSpec plus, for categorical features,
/// the dictionary code of one category. Continuous features and the
/// intercept carry no category.
struct FeatureKey {
    int32_t feature = 0;
    int32_t category = -1;  // -1 = none (continuous / intercept)

    bool is_categorical() const { return category >= 0; }
    auto operator<=>(const FeatureKey &) const = default;
};

/// Unordered feature-key pair in canonical order (first <= second).
struct KeyPair {
    FeatureKey a, b;

    KeyPair() = default;
    KeyPair(FeatureKey x, FeatureKey y) {
        if (y < x) std::swap(x, y);
        a = x;
        b = y;
    }
    auto operator<=>(const KeyPair &) const = default;
};

// Sparse maps are sorted key/value vectors; sorted order both deduplicates
// and fixes the floating-point summation order.
template <class K>
using SparseVec = std::vector<std::pair<K, double>>;

template <class K>
void sparse_add(SparseVec<K> &dst, const K &key, double val) {
    auto it = std::lower_bound(dst.begin(), dst.end(), key,
                               [](const auto &e, const K &k) { return e.first < k; });
    if (it != dst.end() && it->first == key)
        it->second += val;
    else
        dst.insert(it, {key, val});
}

template <class K>
double sparse_get(const SparseVec<K> &v, const K &key) {
    auto it = std::lower_bound(v.begin(), v.end(), key,
                               [](const auto &e, const K &k) { return e.first < k; });
    return (it != v.end() && it->first == key) ? it->second : 0.0;
}

/// dst += factor * src (linear merge of two sorted vectors).
template <class K>
void sparse_axpy(SparseVec<K> &dst, const SparseVec<K> &src, double factor) {
    if (factor == 0.0 || src.empty()) return;
    SparseVec<K> out;
    out.reserve(dst.size() + src.size());
    auto d = dst.begin();
    auto s = src.begin();
    while (d != dst.end() && s != src.end()) {
        if (d->first < s->first)
            out.push_back(*d++);
        else if (s->first < d->first)
            out.push_back({s->first, factor * s->second}), ++s;
        else {
            out.push_back({d->first, d->second + factor * s->second});
            ++d, ++s;
        }
    }
    out.insert(out.end(), d, dst.end());
    for (; s != src.end(); ++s) out.push_back({s->first, factor * s->second});
    dst = std::move(out);
}

template <class K>
bool sparse_all_below(const SparseVec<K> &v, double eps) {
    for (const auto &[k, x] : v)
        if (std::abs(x) > eps) return false;
    return true;
}

template <class K>
void sparse_prune(SparseVec<K> &v, double eps) {
    std::erase_if(v, [eps](const auto &e) { return std::abs(e.second) <= eps; });
}

// ---------------------------------------------------------------------------
// Covariance ring
// ---------------------------------------------------------------------------

/// Element of the covariance ring: degree-0 count, degree-1 sums per
/// feature key, degree-2 sums per unordered key pair. One value of this
/// type holds every count / sum(x_i) / sum(x_i*x_j) / group-by-count
/// statistic of a (sub)join at once.
struct CovariancePayload {
    double c = 0.0;
    SparseVec<FeatureKey> s;
    SparseVec<KeyPair> q;

    double s_at(FeatureKey k) const { return sparse_get(s, k); }
    double q_at(FeatureKey k1, FeatureKey k2) const { return sparse_get(q, KeyPair(k1, k2)); }
};

inline CovariancePayload cov_zero() { return {}; }
inline CovariancePayload cov_one() { return {1.0, {}, {}}; }

inline CovariancePayload plus(const CovariancePayload &a, const CovariancePayload &b) {
    CovariancePayload out = a;
    out.c += b.c;
    sparse_axpy(out.s, b.s, 1.0);
    sparse_axpy(out.q, b.q, 1.0);
    return out;
}

inline CovariancePayload neg(const CovariancePayload &a) {
    CovariancePayload out = a;
    out.c = -out.c;
    for (auto &[k, v] : out.s) v = -v;
    for (auto &[k, v] : out.q) v = -v;
    return out;
}

/// Product rule: c' = c_a*c_b; s' = c_a*s_b + c_b*s_a;
/// q' = c_a*q_b + c_b*q_a + s_a (x) s_b, where the cross term walks every
/// ordered key pair of the two degree-1 maps so q{{i,j}} accumulates both
/// s_a[i]*s_b[j] and s_a[j]*s_b[i].
inline CovariancePayload times(const CovariancePayload &a, const CovariancePayload &b) {
    CovariancePayload out;
    out.c = a.c * b.c;
    sparse_axpy(out.s, a.s, b.c);
    sparse_axpy(out.s, b.s, a.c);
    sparse_axpy(out.q, a.q, b.c);
    sparse_axpy(out.q, b.q, a.c);
    for (const auto &[k1, v1] : a.s)
        for (const auto &[k2, v2] : b.s) sparse_add(out.q, KeyPair(k1, k2), v1 * v2);
    return out;
}

inline bool is_zero(const CovariancePayload &a, double eps = kEpsZero) {
    return std::abs(a.c) <= eps && sparse_all_below(a.s, eps) && sparse_all_below(a.q, eps);
}

/// Drops components with magnitude <= eps.
inline CovariancePayload compacted(const CovariancePayload &a, double eps = kEpsZero) {
    CovariancePayload out = a;
    if (std::abs(out.c) <= eps) out.c = 0.0;
    sparse_prune(out.s, eps);
    sparse_prune(out.q, eps);
    return out;
}

/// Component-wise comparison treating missing map entries as zero.
/// tol is relative to the largest magnitude seen, with an absolute floor.
bool payload_close(const CovariancePayload &a, const CovariancePayload &b, double tol);

/// Deterministic key-sorted rendering, e.g.
/// `c=3; s={a=5, c=18}; q={(a,a)=11, (a,c)=32, (c,c)=110}`.
std::string to_debug_string(const CovariancePayload &p, const struct LiftSpec &spec,
                            const Catalog &catalog);

// ---------------------------------------------------------------------------
// Counting ring
// ---------------------------------------------------------------------------

/// Integer multiplicity payload; ring operations are +, *, unary -.
struct CountPayload {
    int64_t value = 0;
    auto operator<=>(const CountPayload &) const = default;
};

inline CountPayload plus(CountPayload a, CountPayload b) { return {a.value + b.value}; }
inline CountPayload times(CountPayload a, CountPayload b) { return {a.value * b.value}; }
inline CountPayload neg(CountPayload a) { return {-a.value}; }
inline bool is_zero(CountPayload a, double = kEpsZero) { return a.value == 0; }
inline CountPayload compacted(CountPayload a, double = kEpsZero) { return a; }

// ---------------------------------------------------------------------------
// Lifting
// ---------------------------------------------------------------------------

/// One feature of a lift specification. `source` is the attribute name, or
/// empty for the synthetic intercept (a constant-1 continuous feature).
struct LiftFeature {
    std::string name;  // display name ("intercept" for the synthetic one)
    std::string source_attr;
    AttrKind kind = AttrKind::Continuous;
    bool is_intercept = false;
    bool is_response = false;
};

/// Ordered feature list of a query: intercept first when requested, then
/// the query features, then the response. Attributes outside the list lift
/// to the ring's one.
struct LiftSpec {
    std::vector<LiftFeature> features;

    int index_of_attr(const std::string &attr) const {
        for (size_t i = 0; i < features.size(); ++i)
            if (!features[i].is_intercept && features[i].source_attr == attr)
                return static_cast<int>(i);
        return -1;
    }
    int intercept_index() const {
        for (size_t i = 0; i < features.size(); ++i)
            if (features[i].is_intercept) return static_cast<int>(i);
        return -1;
    }
    int response_index() const {
        for (size_t i = 0; i < features.size(); ++i)
            if (features[i].is_response) return static_cast<int>(i);
        return -1;
    }

    FeatureKey key_for(int feature_idx, Value v) const {
        const LiftFeature &f = features[feature_idx];
        if (f.kind == AttrKind::Categorical)
            return {feature_idx, static_cast<int32_t>(v)};
        return {feature_idx, -1};
    }

    std::string key_name(const FeatureKey &k, const Catalog &catalog) const;
};

/// Builds the lift spec for a query: [intercept?] features... [response?].
LiftSpec make_lift_spec(const QuerySpec &query, const Catalog &catalog);

/// Lift of one attribute value into the covariance ring:
///   continuous x   -> (1, {X: x},     {{X,X}: x^2})
///   categorical v  -> (1, {(X,v): 1}, {{(X,v),(X,v)}: 1})
inline CovariancePayload lift_value(const LiftSpec &spec, int feature_idx, Value v) {
    const LiftFeature &f = spec.features[feature_idx];
    CovariancePayload p = cov_one();
    if (f.kind == AttrKind::Categorical) {
        FeatureKey k{feature_idx, static_cast<int32_t>(v)};
        p.s.push_back({k, 1.0});
        p.q.push_back({KeyPair(k, k), 1.0});
    } else {
        FeatureKey k{feature_idx, -1};
        p.s.push_back({k, v});
        p.q.push_back({KeyPair(k, k), v * v});
    }
    return p;
}

/// Lift of the synthetic intercept (constant 1).
inline CovariancePayload lift_intercept(const LiftSpec &spec) {
    int idx = spec.intercept_index();
    return idx < 0 ? cov_one() : lift_value(spec, idx, 1.0);
}

// ---------------------------------------------------------------------------
// Ring objects (plugged into the evaluator)
// ---------------------------------------------------------------------------

struct CovarianceRing {
    using P = CovariancePayload;
    LiftSpec spec;

    P zero() const { return cov_zero(); }
    P one() const { return cov_one(); }
    P add(const P &a, const P &b) const { return plus(a, b); }
    P mul(const P &a, const P &b) const { return times(a, b); }
    P from_multiplicity(int64_t m) const { return {static_cast<double>(m), {}, {}}; }
    bool zeroish(const P &a) const { return is_zero(a); }
    /// Lift of one attribute value; attributes outside the lift spec lift to one.
    P lift(const std::string &attr, Value v) const {
        int idx = spec.index_of_attr(attr);
        return idx < 0 ? one() : lift_value(spec, idx, v);
    }
};

struct CountingRing {
    using P = CountPayload;

    P zero() const { return {0}; }
    P one() const { return {1}; }
    P add(P a, P b) const { return plus(a, b); }
    P mul(P a, P b) const { return times(a, b); }
    P from_multiplicity(int64_t m) const { return {m}; }
    bool zeroish(P a) const { return a.value == 0; }
    P lift(const std::string &, Value) const { return one(); }
};

}  // namespace factorml
