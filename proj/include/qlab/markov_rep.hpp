// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <span>
#include <stdexcept>
#include <vector>

#include "qlab/models.hpp"

namespace qlab {

/// Row-stochastic operator Q acting on state functions, with the measure it
/// preserves. (Qh)(x) = sum_y Q(x, y) h(y).
struct TransitionOperator {
    Eigen::MatrixXd matrix;
    Eigen::VectorXd reference;  // pi

    [[nodiscard]] Eigen::VectorXd apply(const Eigen::VectorXd& h) const { return matrix * h; }
    [[nodiscard]] int states() const { return static_cast<int>(matrix.rows()); }
};

/// Checks Q1 = 1, positivity and pi-invariance (tolerance 1e-12).
TransitionOperator make_transition_operator(Eigen::MatrixXd matrix, Eigen::VectorXd reference);

/// Q h = E(h o theta | F_0) on functions of the current state; this is P.
TransitionOperator q_operator_from_model(const MarkovModel& model);

/// The pre-dual T as a matrix on densities: T(x, y) = pi(y) Q(y, x) / pi(x),
/// so that pi((Qh) k) = pi(h (T k)).
Eigen::MatrixXd predual_matrix(const TransitionOperator& op);

double l1_norm(const Eigen::VectorXd& h, const Eigen::VectorXd& weights);

struct ContractionCheck {
    double l1_before = 0.0;
    double l1_after = 0.0;
    double sup_before = 0.0;
    double sup_after = 0.0;
    bool passes = true;
};

struct DunfordSchwartzReport {
    std::vector<ContractionCheck> checks;
    std::vector<std::size_t> violations;  // indices into the test family
    [[nodiscard]] bool all_pass() const { return violations.empty(); }
};

/// ||Qh||_{1,pi} <= ||h||_{1,pi} and ||Qh||_inf <= ||h||_inf for each test function.
DunfordSchwartzReport verify_dunford_schwartz(const TransitionOperator& op,
                                              const std::vector<Eigen::VectorXd>& test_functions);

/// h*_N = max_{1<=n<=N} (1/n) sum_{i<n} Q^i |h|.
struct MaximalFunction {
    Eigen::VectorXd values;
    Eigen::VectorXd base;
    int truncation = 0;
};

MaximalFunction maximal_function(const TransitionOperator& op, const Eigen::VectorXd& h, int N);

struct HopfLevel {
    double level = 0.0;
    double mass = 0.0;  // pi(h* >= level)
    double product = 0.0;
};

struct HopfCheck {
    std::vector<HopfLevel> levels;
    double l1_norm = 0.0;
    double sup_product = 0.0;
    bool holds = true;
};

/// sup_x x * pi(h*_N > x) <= ||h||_{1,pi}. The supremum over x is reached as x
/// increases to an attained level v, where it equals v * pi(h*_N >= v), so
/// every distinct level is checked in that form.
HopfCheck hopf_check(const TransitionOperator& op, const MaximalFunction& maximal);

/// sup_lambda lambda^2 * mu(|h| >= lambda) for a state function under weights.
double weak_l2_tail(const Eigen::VectorXd& h, const Eigen::VectorXd& weights);
/// Same pseudo-norm for an empirical sample (uniform weights).
double weak_l2_tail(std::span<const double> sample);

struct MarkovPropertyCheck {
    double max_discrepancy = 0.0;
    std::vector<double> max_discrepancy_by_n;  // index n-1
    long tuples_checked = 0;
};

/// For every n <= n_max and every tuple of single-state indicators, compares
/// the path integral of phi_0(W_0)...phi_n(W_n) with that of
/// phi_0(W_0)...phi_{n-1}(W_{n-1}) (Q phi_n)(W_{n-1}), both by enumeration of
/// paths weighted by pi and P.
MarkovPropertyCheck verify_markov_property(const MarkovModel& model, int n_max);

class PoissonError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Solves (I - P) g_hat = g with pi(g_hat) = 0 through the fundamental
/// matrix I - P + 1 pi^T. Residual must be <= 1e-10 in sup norm.
Eigen::VectorXd poisson_solve(const Eigen::MatrixXd& transition, const Eigen::VectorXd& g);
Eigen::VectorXd poisson_solve(const Eigen::MatrixXd& transition, const Eigen::VectorXd& stationary,
                              const Eigen::VectorXd& g);

/// Maximal function of a function H(a, b) of the pair (W_{-1}, W_0) under the
/// lifted operator (QH)(a, b) = sum_y P(b, y) H(b, y). Returns h*_N(a, b).
Eigen::MatrixXd pair_maximal_function(const Eigen::MatrixXd& transition, const Eigen::MatrixXd& H,
                                      int N);

}  // namespace qlab
