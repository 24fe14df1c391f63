#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "factorml/relation.hpp"

namespace factorml {

/// Synthetic path join R1(A0,A1) |><| R2(A1,A2) |><| R3(A2,A3) |><| R4(A3,A4)
/// with N tuples per relation. The A1 and A3 edges match 1:1; the A2 edge
/// has a fixed key domain (kBenchKeyDomain), so each key matches N/domain
/// partners and the join result has ~N^2/domain tuples while every leaf
/// view stays O(N).
inline constexpr int64_t kBenchKeyDomain = 25;

Catalog make_path_benchmark_db(int64_t n);

/// The sigma query the benchmark measures (features A0, A4, no response).
QuerySpec path_benchmark_query();

struct BenchRow {
    int64_t n = 0;
    uint64_t factorized_ring_ops = 0;
    uint64_t naive_tuples = 0;
    double factorized_ms = 0;
    double naive_ms = 0;
    bool naive_capped = false;
};

struct BenchReport {
    std::vector<BenchRow> rows;

    std::string to_csv() const;
    /// Least-squares slope of log(value) against log(n) over the rows.
    static double log_log_slope(const std::vector<std::pair<int64_t, double>> &points);
    double factorized_slope() const;
    double naive_slope() const;  // over uncapped rows only
};

/// Runs factorized sigma and the materialize-then-aggregate baseline on
/// each size; a baseline that exceeds the cap is marked capped and the
/// factorized side is still reported.
BenchReport bench_scaling(const std::vector<int64_t> &sizes, uint64_t naive_cap);

}  // namespace factorml
