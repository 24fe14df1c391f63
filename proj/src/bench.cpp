#include "factorml/bench.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "factorml/engine.hpp"

namespace factorml {

Catalog make_path_benchmark_db(int64_t n) {
    Catalog db;
    auto cont = [](const std::string &name) { return AttributeDecl{name, AttrKind::Continuous}; };
    db.register_schema("R1", {cont("A0"), cont("A1")});
    db.register_schema("R2", {cont("A1"), cont("A2")});
    db.register_schema("R3", {cont("A2"), cont("A3")});
    db.register_schema("R4", {cont("A3"), cont("A4")});

    const double m = static_cast<double>(std::min<int64_t>(kBenchKeyDomain, n));
    for (int64_t j = 0; j < n; ++j) {
        auto dj = static_cast<double>(j);
        double mid = std::fmod(dj, m);
        db.relation("R1").add({dj, dj}, 1);
        db.relation("R2").add({dj, mid}, 1);
        db.relation("R3").add({mid, dj}, 1);
        db.relation("R4").add({dj, std::fmod(dj * 7919.0, 1000.0)}, 1);
    }
    return db;
}

QuerySpec path_benchmark_query() {
    QuerySpec q;
    q.relations = {"R1", "R2", "R3", "R4"};
    q.features = {"A0", "A4"};
    return q;
}

namespace {

double ms_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

}  // namespace

BenchReport bench_scaling(const std::vector<int64_t> &sizes, uint64_t naive_cap) {
    BenchReport report;
    QuerySpec query = path_benchmark_query();
    for (int64_t n : sizes) {
        Catalog db = make_path_benchmark_db(n);
        BenchRow row;
        row.n = n;

        auto t0 = std::chrono::steady_clock::now();
        SigmaResult fact = sigma(db, query);
        row.factorized_ms = ms_since(t0);
        row.factorized_ring_ops = fact.ops.ring_ops();

        OpCounts naive_ops;
        auto t1 = std::chrono::steady_clock::now();
        try {
            CovariancePayload base = naive_sigma(db, query, naive_cap, &naive_ops);
            row.naive_ms = ms_since(t1);
            row.naive_tuples = naive_ops.materialized_tuples;
            if (!payload_close(fact.payload, base, 1e-9))
                throw Error(ErrorKind::Internal, "benchmark cross-check failed: factorized and "
                                                 "naive sigma disagree");
        } catch (const Error &e) {
            if (e.kind() != ErrorKind::Resource) throw;
            row.naive_capped = true;
            row.naive_ms = ms_since(t1);
            row.naive_tuples = naive_cap;
        }
        report.rows.push_back(row);
    }
    return report;
}

double BenchReport::log_log_slope(const std::vector<std::pair<int64_t, double>> &points) {
    if (points.size() < 2) return 0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto &[n, v] : points) {
        double x = std::log(static_cast<double>(n));
        double y = std::log(v);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double k = static_cast<double>(points.size());
    return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

double BenchReport::factorized_slope() const {
    std::vector<std::pair<int64_t, double>> pts;
    for (const auto &r : rows) pts.push_back({r.n, static_cast<double>(r.factorized_ring_ops)});
    return log_log_slope(pts);
}

double BenchReport::naive_slope() const {
    std::vector<std::pair<int64_t, double>> pts;
    for (const auto &r : rows)
        if (!r.naive_capped) pts.push_back({r.n, static_cast<double>(r.naive_tuples)});
    return log_log_slope(pts);
}

std::string BenchReport::to_csv() const {
    std::ostringstream out;
    out << "n,factorized_ring_ops,naive_tuples,factorized_ms,naive_ms,naive_capped\n";
    for (const auto &r : rows)
        out << r.n << ',' << r.factorized_ring_ops << ',' << r.naive_tuples << ','
            << r.factorized_ms << ',' << r.naive_ms << ',' << (r.naive_capped ? 1 : 0) << '\n';
    return out.str();
}

}  // namespace factorml
