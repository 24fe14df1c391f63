#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "factorml/cart.hpp"
#include "factorml/engine.hpp"
#include "factorml/ivm.hpp"
#include "factorml/ring.hpp"
#include "factorml/sigma_system.hpp"

namespace factorml::testing {

// ---------------------------------------------------------------------------
// Fixtures from small hand-checked databases
// ---------------------------------------------------------------------------

/// R(a,b) = {(1,2),(3,4)}, S(b,c) = {(2,5),(2,6),(4,7)}; join has 3 tuples
/// (1,2,5),(1,2,6),(3,4,7).
Catalog make_d0();
QuerySpec d0_query(bool intercept = false);

/// Single table T(x,y) = {(1,2),(2,4),(3,6)} (noiseless y = 2x).
Catalog make_t_fixture();
QuerySpec t_query();

// ---------------------------------------------------------------------------
// Random databases (acyclic by construction)
// ---------------------------------------------------------------------------

/// Continuous values are dyadic rationals (multiples of 1/4 in a small
/// range), so degree-<=2 ring arithmetic is exact: factorized and direct
/// summation agree bit for bit and insert/delete streams cancel exactly.
struct RandomDbOptions {
    int min_relations = 2, max_relations = 4;
    int min_tuples = 10, max_tuples = 50;
    int max_private_attrs = 2;
    bool need_response = false;       // guarantee a continuous response
    bool categorical_only = false;    // categorical attributes everywhere
    int n_features = -1;              // -1: pick 1..3 automatically
};

struct RandomDb {
    Catalog db;
    QuerySpec query;
};

RandomDb make_random_db(std::mt19937_64 &rng, const RandomDbOptions &opt = {});

/// Random dyadic value (multiple of 1/4 in [0, 8]).
double random_dyadic(std::mt19937_64 &rng);

/// Random update events against the given database (inserts of random
/// tuples, deletes of existing ones, occasionally deletes of absent ones).
std::vector<UpdateEvent> make_random_events(std::mt19937_64 &rng, const Catalog &db,
                                            const QuerySpec &query, int count);

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

/// Reference CART: materializes the join, generates candidates from the
/// materialized distributions, and evaluates every candidate by direct
/// scans. Same public parameters and tie-breaking rule as train_cart but a
/// fully independent evaluation path.
DecisionTree reference_cart(const Catalog &db, const QuerySpec &query, const std::string &response,
                            const CartParams &params);

/// Structural tree equality: same splits (attr, op, threshold/categories),
/// counts equal, leaf values within tol.
bool trees_equal(const DecisionTree &a, const DecisionTree &b, double tol,
                 std::string *why = nullptr);

/// All spanning trees over k labeled vertices via Pruefer sequences
/// (k^(k-2) trees), as edge lists of (i, j) index pairs with i < j.
std::vector<std::vector<std::pair<int, int>>> all_spanning_trees(int k);

/// Canonical-order sum of edge weights (sorted by attribute-name pair), the
/// same summation ChowLiuTree::total_weight uses.
double spanning_tree_weight(const std::vector<std::pair<int, int>> &edges,
                            const std::vector<std::string> &attrs,
                            const std::map<std::pair<int, int>, double> &mi);

/// Ridge loss over the materialized join at a given parameter vector:
/// (1/2N) sum m (x.theta - y)^2 + (lambda/2)|theta|^2 with x aligned to
/// sys.keys (indicator encoding for categorical keys, 1 for the intercept).
double materialized_ridge_loss(const Catalog &db, const QuerySpec &query, const SigmaSystem &sys,
                               double lambda, const Eigen::VectorXd &theta);

// ---------------------------------------------------------------------------
// Comparison helpers
// ---------------------------------------------------------------------------

bool views_match(const std::vector<View<CovariancePayload>> &a,
                 const std::vector<View<CovariancePayload>> &b, double tol,
                 std::string *why = nullptr);
bool views_match(const std::vector<View<CountPayload>> &a,
                 const std::vector<View<CountPayload>> &b, double tol,
                 std::string *why = nullptr);

/// Random covariance payload with a handful of keys (for ring-axiom
/// property tests).
CovariancePayload random_payload(std::mt19937_64 &rng, int max_keys = 6);

// ---------------------------------------------------------------------------
// Filesystem scratch space
// ---------------------------------------------------------------------------

class TempDir {
  public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;

    const std::string &path() const { return path_; }
    std::string file(const std::string &name, const std::string &body) const;

  private:
    std::string path_;
};

}  // namespace factorml::testing
