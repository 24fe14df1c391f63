#include "factorml/ring.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace factorml {

namespace {

std::string short_double(double v) {
    if (v == static_cast<double>(static_cast<long long>(v)) && std::abs(v) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
        return buf;
    }
    for (int prec = 1; prec <= 17; ++prec) {
        char trial[40];
        std::snprintf(trial, sizeof(trial), "%.*g", prec, v);
        if (std::strtod(trial, nullptr) == v) return trial;
    }
    return "?";
}

}  // namespace

LiftSpec make_lift_spec(const QuerySpec &query, const Catalog &catalog) {
    validate_query(query, catalog);
    LiftSpec spec;
    if (query.intercept) {
        LiftFeature f;
        f.name = "intercept";
        f.is_intercept = true;
        spec.features.push_back(f);
        for (const auto &r : query.relations)
            if (catalog.relation(r).has_attr("intercept"))
                throw Error(ErrorKind::UnsupportedQuery,
                            "attribute name 'intercept' collides with the synthetic intercept");
    }
    auto push_attr = [&](const std::string &attr, bool is_response) {
        LiftFeature f;
        f.name = attr;
        f.source_attr = attr;
        auto kind = catalog.attr_kind(attr);
        if (!kind) throw Error(ErrorKind::UnsupportedQuery, "unknown attribute '" + attr + "'");
        f.kind = *kind;
        f.is_response = is_response;
        spec.features.push_back(std::move(f));
    };
    for (const auto &f : query.features) push_attr(f, false);
    if (query.response) push_attr(*query.response, true);
    return spec;
}

std::string LiftSpec::key_name(const FeatureKey &k, const Catalog &catalog) const {
    const LiftFeature &f = features[k.feature];
    if (f.is_intercept) return "intercept";
    if (k.category < 0) return f.name;
    return f.name + "=" + catalog.dictionary(f.source_attr).decode(static_cast<uint32_t>(k.category));
}

bool payload_close(const CovariancePayload &a, const CovariancePayload &b, double tol) {
    double scale = std::abs(a.c) + std::abs(b.c);
    for (const auto &[k, v] : a.s) scale = std::max(scale, std::abs(v));
    for (const auto &[k, v] : b.s) scale = std::max(scale, std::abs(v));
    for (const auto &[k, v] : a.q) scale = std::max(scale, std::abs(v));
    for (const auto &[k, v] : b.q) scale = std::max(scale, std::abs(v));
    double bound = tol * std::max(1.0, scale);

    if (std::abs(a.c - b.c) > bound) return false;
    auto diff_ok = [bound](const auto &x, const auto &y) {
        auto ix = x.begin();
        auto iy = y.begin();
        while (ix != x.end() || iy != y.end()) {
            if (iy == y.end() || (ix != x.end() && ix->first < iy->first)) {
                if (std::abs(ix->second) > bound) return false;
                ++ix;
            } else if (ix == x.end() || iy->first < ix->first) {
                if (std::abs(iy->second) > bound) return false;
                ++iy;
            } else {
                if (std::abs(ix->second - iy->second) > bound) return false;
                ++ix, ++iy;
            }
        }
        return true;
    };
    return diff_ok(a.s, b.s) && diff_ok(a.q, b.q);
}

std::string to_debug_string(const CovariancePayload &p, const LiftSpec &spec,
                            const Catalog &catalog) {
    std::ostringstream out;
    out << "c=" << short_double(p.c) << "; s={";
    for (size_t i = 0; i < p.s.size(); ++i) {
        if (i) out << ", ";
        out << spec.key_name(p.s[i].first, catalog) << "=" << short_double(p.s[i].second);
    }
    out << "}; q={";
    for (size_t i = 0; i < p.q.size(); ++i) {
        if (i) out << ", ";
        out << "(" << spec.key_name(p.q[i].first.a, catalog) << ","
            << spec.key_name(p.q[i].first.b, catalog) << ")=" << short_double(p.q[i].second);
    }
    out << "}";
    return out.str();
}

}  // namespace factorml
