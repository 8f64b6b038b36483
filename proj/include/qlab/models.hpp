// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "qlab/random.hpp"

namespace qlab {

/// Raised when a model definition violates its invariants.
class InvalidModel : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Causal moving average f = sum_{j=0..J} a_j eps_{-j} over iid centered
/// innovations. F_0 is generated by the innovations with index <= 0.
struct LinearModel {
    std::vector<double> coeffs;  // a_0..a_J
    InnovationDistribution innovation;
    double tail_bound = 0.0;  // declared bound on sum_{j>J} |a_j|

    [[nodiscard]] std::size_t horizon() const { return coeffs.size() - 1; }
};

LinearModel make_linear_model(std::vector<double> coeffs, InnovationDistribution innovation,
                              double tail_bound = 0.0);

/// f = g(W_0) for a stationary ergodic finite chain (P, pi) with pi(g) = 0.
class MarkovModel {
  public:
    static constexpr int kMaxStates = 64;

    /// Validates P (row-stochastic, primitive), computes pi and checks pi(g) = 0.
    MarkovModel(Eigen::MatrixXd transition, Eigen::VectorXd observable);

    [[nodiscard]] int states() const { return static_cast<int>(transition_.rows()); }
    [[nodiscard]] const Eigen::MatrixXd& transition() const { return transition_; }
    [[nodiscard]] const Eigen::VectorXd& stationary() const { return stationary_; }
    [[nodiscard]] const Eigen::VectorXd& observable() const { return observable_; }

    /// Next state drawn from row `from` of P by inverse CDF.
    int step(int from, RandomStream& stream) const;
    /// State drawn from pi.
    int draw_stationary(RandomStream& stream) const;

  private:
    Eigen::MatrixXd transition_;
    Eigen::VectorXd stationary_;
    Eigen::VectorXd observable_;
    Eigen::MatrixXd cumulative_;
    Eigen::VectorXd stationary_cumulative_;
};

/// Stationary distribution of a row-stochastic matrix (dense solve).
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& transition);

/// True when some power P^k with k <= (n-1)^2 + 1 is entrywise positive.
bool is_primitive(const Eigen::MatrixXd& transition);

using Model = std::variant<LinearModel, MarkovModel>;

/// Frozen past for the linear model: innovations[i] = eps_{-i}, i = 0..J.
struct LinearPast {
    std::vector<double> innovations;
};

/// Frozen current state W_0. By the Markov property mu_x depends on the past
/// only through W_0.
struct MarkovPast {
    int state = 0;
};

using PastFixture = std::variant<LinearPast, MarkovPast>;

/// A quenched draw: the fresh randomness plus the observed values.
struct QuenchedRealization {
    std::vector<double> fresh_innovations;  // linear: eps_1..eps_n
    std::vector<int> states;                // markov: W_0..W_n
    std::vector<double> values;             // f o theta^1 .. f o theta^n
};

PastFixture sample_fixture(const Model& model, RandomStream& stream);

/// Throws InvalidModel when the fixture kind or length does not match the model.
void check_fixture(const Model& model, const PastFixture& fixture);

/// E_0(U^k f) at the fixture, k >= 1.
double conditional_expectation_E0(const Model& model, const PastFixture& fixture, int k);

/// (E_0(S_1), ..., E_0(S_n)).
std::vector<double> conditional_mean_E0_Sn(const Model& model, const PastFixture& fixture,
                                           int n);

/// Draws (f o theta^1, ..., f o theta^n) under mu_x, keeping the randomness.
QuenchedRealization sample_quenched_realization(const Model& model, const PastFixture& fixture,
                                                RandomStream& stream, int n);

std::vector<double> sample_quenched_path(const Model& model, const PastFixture& fixture,
                                         RandomStream& stream, int n);

/// sample_fixture followed by sample_quenched_path on the same stream.
std::vector<double> sample_stationary_path(const Model& model, RandomStream& stream, int n);

/// Variance of the innovations (linear) or pi(g^2) (markov).
double observable_variance(const Model& model);

/// Stable hex digest of a fixture's contents.
std::string fixture_digest(const PastFixture& fixture);

}  // namespace qlab
