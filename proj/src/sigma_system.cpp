#include "factorml/sigma_system.hpp"

#include "factorml/error.hpp"

namespace factorml {

SigmaSystem build_sigma_system(const CovariancePayload &payload, const LiftSpec &spec) {
    int resp = spec.response_index();
    if (resp < 0)
        throw Error(ErrorKind::UnsupportedQuery, "no response designated for this query");
    if (spec.features[resp].kind != AttrKind::Continuous)
        throw Error(ErrorKind::Type, "ridge regression needs a continuous response");

    SigmaSystem sys;
    sys.spec = spec;
    sys.n = payload.c;
    if (sys.n < 0.5)
        throw Error(ErrorKind::EmptyTrainingSet, "the join result has no tuples");

    for (size_t fi = 0; fi < spec.features.size(); ++fi) {
        if (static_cast<int>(fi) == resp) continue;
        const LiftFeature &f = spec.features[fi];
        if (f.kind == AttrKind::Categorical) {
            // observed categories only, ascending code order (s is key-sorted)
            for (const auto &[key, count] : payload.s)
                if (key.feature == static_cast<int32_t>(fi) && count > kEpsZero)
                    sys.keys.push_back(key);
        } else {
            sys.keys.push_back({static_cast<int32_t>(fi), -1});
        }
    }

    FeatureKey y{resp, -1};
    const auto m = static_cast<Eigen::Index>(sys.keys.size());
    sys.Q.setZero(m, m);
    sys.r.setZero(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        sys.r(i) = payload.q_at(sys.keys[i], y);
        for (Eigen::Index j = i; j < m; ++j) {
            double v = payload.q_at(sys.keys[i], sys.keys[j]);
            sys.Q(i, j) = v;
            sys.Q(j, i) = v;
        }
    }
    sys.y_sq = payload.q_at(y, y);
    return sys;
}

}  // namespace factorml
