#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "support/test_support.hpp"

using namespace factorml;
using factorml::testing::random_payload;

namespace {

FeatureKey ka{0, -1}, kc{1, -1};

CovariancePayload payload_a() {
    // (1, {A:2}, {AA:4}) — the lift of a continuous value 2
    CovariancePayload p = cov_one();
    sparse_add(p.s, ka, 2.0);
    sparse_add(p.q, KeyPair(ka, ka), 4.0);
    return p;
}

}  // namespace

TEST_CASE("covariance plus: identity, inverse, componentwise sums") {
    CovariancePayload a = payload_a();
    CHECK(payload_close(plus(a, cov_zero()), a, 0.0));
    CHECK(is_zero(plus(a, neg(a))));

    CovariancePayload b = cov_one();
    sparse_add(b.s, ka, 3.0);
    sparse_add(b.q, KeyPair(ka, ka), 9.0);
    CovariancePayload sum = plus(a, b);
    CHECK(sum.c == 2.0);
    CHECK(sum.s_at(ka) == 5.0);
    CHECK(sum.q_at(ka, ka) == 13.0);
}

TEST_CASE("covariance times: identity and the product rule") {
    CovariancePayload a = payload_a();
    CHECK(payload_close(times(a, cov_one()), a, 0.0));
    CHECK(payload_close(times(cov_one(), a), a, 0.0));

    // (1,{A:2},{AA:4}) x (1,{C:5},{CC:25}) = (1,{A:2,C:5},{AA:4,CC:25,AC:10})
    CovariancePayload b = cov_one();
    sparse_add(b.s, kc, 5.0);
    sparse_add(b.q, KeyPair(kc, kc), 25.0);
    CovariancePayload prod = times(a, b);
    CHECK(prod.c == 1.0);
    CHECK(prod.s_at(ka) == 2.0);
    CHECK(prod.s_at(kc) == 5.0);
    CHECK(prod.q_at(ka, ka) == 4.0);
    CHECK(prod.q_at(kc, kc) == 25.0);
    CHECK(prod.q_at(ka, kc) == 10.0);
}

TEST_CASE("ring axioms hold on randomized payloads") {
    std::mt19937_64 rng(42);
    const double tol = 1e-9;
    for (int trial = 0; trial < 300; ++trial) {
        CovariancePayload a = random_payload(rng);
        CovariancePayload b = random_payload(rng);
        CovariancePayload c = random_payload(rng);

        CHECK(payload_close(plus(a, b), plus(b, a), tol));
        CHECK(payload_close(plus(plus(a, b), c), plus(a, plus(b, c)), tol));
        CHECK(payload_close(times(a, b), times(b, a), tol));
        CHECK(payload_close(times(times(a, b), c), times(a, times(b, c)), tol));
        CHECK(payload_close(times(a, plus(b, c)), plus(times(a, b), times(a, c)), tol));
        CHECK(payload_close(plus(a, cov_zero()), a, 0.0));
        CHECK(payload_close(times(a, cov_one()), a, 0.0));
        CHECK(is_zero(plus(a, neg(a))));
        CHECK(payload_close(times(a, cov_zero()), cov_zero(), tol));
    }
}

TEST_CASE("lift: continuous, categorical, and non-feature attributes") {
    Catalog db;
    db.register_schema("R", {{"A", AttrKind::Continuous},
                             {"G", AttrKind::Categorical},
                             {"B", AttrKind::Continuous}});
    db.dictionary("G").encode("u");
    db.dictionary("G").encode("v");
    QuerySpec q;
    q.relations = {"R"};
    q.features = {"A", "G"};
    LiftSpec spec = make_lift_spec(q, db);

    CovariancePayload la = lift_value(spec, 0, 2.0);
    CHECK(la.c == 1.0);
    CHECK(la.s_at({0, -1}) == 2.0);
    CHECK(la.q_at({0, -1}, {0, -1}) == 4.0);

    CovariancePayload lg = lift_value(spec, 1, 1.0);
    CHECK(lg.c == 1.0);
    CHECK(lg.s_at({1, 1}) == 1.0);
    CHECK(lg.q_at({1, 1}, {1, 1}) == 1.0);

    CovarianceRing ring{spec};
    CHECK(payload_close(ring.lift("B", 7.0), cov_one(), 0.0));  // not a lifted feature
}

TEST_CASE("single-tuple product equals direct degree-2 statistics") {
    std::mt19937_64 rng(9);
    Catalog db;
    db.register_schema("R", {{"A", AttrKind::Continuous},
                             {"B", AttrKind::Continuous},
                             {"G", AttrKind::Categorical}});
    db.dictionary("G").encode("u");
    db.dictionary("G").encode("v");
    db.dictionary("G").encode("w");
    QuerySpec q;
    q.relations = {"R"};
    q.features = {"A", "B", "G"};
    LiftSpec spec = make_lift_spec(q, db);

    for (int trial = 0; trial < 200; ++trial) {
        double a = factorml::testing::random_dyadic(rng);
        double b = factorml::testing::random_dyadic(rng);
        auto g = static_cast<double>(std::uniform_int_distribution<int>(0, 2)(rng));

        CovariancePayload prod =
            times(times(lift_value(spec, 0, a), lift_value(spec, 1, b)), lift_value(spec, 2, g));

        double vals[3] = {a, b, 1.0};
        FeatureKey keys[3] = {{0, -1}, {1, -1}, {2, static_cast<int32_t>(g)}};
        CHECK(prod.c == 1.0);
        for (int i = 0; i < 3; ++i) {
            CHECK(prod.s_at(keys[i]) == doctest::Approx(vals[i]).epsilon(1e-12));
            for (int j = i; j < 3; ++j)
                CHECK(prod.q_at(keys[i], keys[j]) ==
                      doctest::Approx(vals[i] * vals[j]).epsilon(1e-12));
        }
    }
}

TEST_CASE("counting ring is the integer ring and matches the c component") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int64_t> dist(-50, 50);
    for (int trial = 0; trial < 200; ++trial) {
        CountPayload a{dist(rng)}, b{dist(rng)}, c{dist(rng)};
        CHECK(plus(a, b).value == a.value + b.value);
        CHECK(times(a, b).value == a.value * b.value);
        CHECK(plus(a, neg(a)).value == 0);
        CHECK(times(times(a, b), c).value == times(a, times(b, c)).value);
        CHECK(times(a, plus(b, c)).value == plus(times(a, b), times(a, c)).value);

        // homomorphism into the covariance ring's degree-0 component
        CovariancePayload ca{static_cast<double>(a.value), {}, {}};
        CovariancePayload cb{static_cast<double>(b.value), {}, {}};
        CHECK(plus(ca, cb).c == static_cast<double>(plus(a, b).value));
        CHECK(times(ca, cb).c == static_cast<double>(times(a, b).value));
    }
}

TEST_CASE("is_zero and compaction respect the epsilon threshold") {
    CovariancePayload p;
    p.c = 1e-13;
    CHECK(is_zero(p));
    p.c = 1e-11;
    CHECK_FALSE(is_zero(p));

    CovariancePayload q = cov_one();
    sparse_add(q.s, ka, 1e-13);
    sparse_add(q.s, kc, 2.0);
    CovariancePayload compact = compacted(q);
    CHECK(compact.s.size() == 1);
    CHECK(compact.s_at(kc) == 2.0);
}

TEST_CASE("debug serialization is deterministic and key-sorted") {
    Catalog db = factorml::testing::make_d0();
    QuerySpec q = factorml::testing::d0_query();
    LiftSpec spec = make_lift_spec(q, db);

    CovariancePayload p;
    p.c = 3;
    sparse_add(p.s, {0, -1}, 5.0);
    sparse_add(p.s, {1, -1}, 18.0);
    sparse_add(p.q, KeyPair({0, -1}, {0, -1}), 11.0);
    sparse_add(p.q, KeyPair({0, -1}, {1, -1}), 32.0);
    sparse_add(p.q, KeyPair({1, -1}, {1, -1}), 110.0);

    CHECK(to_debug_string(p, spec, db) ==
          "c=3; s={a=5, c=18}; q={(a,a)=11, (a,c)=32, (c,c)=110}");
}
