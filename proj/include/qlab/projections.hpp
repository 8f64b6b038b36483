// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qlab/models.hpp"

namespace qlab {

/// ||P_0(U^k f)||_2 for k = 0..K with per-entry truncation bias.
struct ProjectionSeries {
    std::vector<double> norms;
    std::vector<double> bias;
    [[nodiscard]] int horizon() const { return static_cast<int>(norms.size()) - 1; }
};

/// Exact projection norms. Linear: |a_k| sigma_eps (zero past J, where the bias
/// column carries tail_bound * sigma_eps). Markov:
/// sum_{x,y} pi(x) P(x,y) [(P^k g)(y) - (P^{k+1} g)(x)]^2.
ProjectionSeries projection_norms(const Model& model, int K);

/// J for linear models; for chains, the first k where the norm falls below
/// 1e-13 of the k = 0 norm (capped at 4096).
int default_projection_horizon(const Model& model);

enum class TailFit { geometric, polynomial, none };
enum class Summability { summable, diverging, inconclusive };

std::string to_string(TailFit fit);
std::string to_string(Summability verdict);

/// Partial sums of a nonnegative series plus the extrapolation verdict.
///
/// The last K/2 points are fitted as log t_k = a + b k (geometric) and as
/// log t_k = a + p log(k + 1) (polynomial); the fit with smaller residual is
/// kept. "summable" needs exact finite support or a fitted tail below 1e-6 of
/// the partial sum; "diverging" needs a polynomial exponent >= -1 or a
/// nondecaying geometric rate; anything else is "inconclusive".
struct SummabilityResult {
    std::vector<double> partial_sums;
    TailFit tail_fit = TailFit::none;
    Summability verdict = Summability::inconclusive;
    double fitted_rate = 0.0;  // b (geometric) or p (polynomial)
    double tail_estimate = 0.0;
    bool finite_support = false;

    [[nodiscard]] double total() const { return partial_sums.empty() ? 0.0 : partial_sums.back(); }
};

SummabilityResult classify_series(std::span<const double> terms);

SummabilityResult hannan_sum(const ProjectionSeries& series);

/// Hannan verdict at the default horizon.
SummabilityResult hannan_verdict(const Model& model);

struct MwResult {
    std::vector<double> conditional_norms;  // ||E_0(U^n f)||_2, n = 1..N
    std::vector<double> terms;              // conditional_norms[n-1] / sqrt(n)
    std::vector<double> bias;               // tail_bound * sigma_eps / sqrt(n)
    SummabilityResult summary;
};

MwResult mw_criterion(const Model& model, int N);

/// Raised when a Hannan-dependent quantity is requested for a diverging series.
class HannanRefusal : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// m^{(r)} = sum_{k<=r} P_0(U^k f); order nullopt means r = infinity.
struct MartingaleApprox {
    std::optional<int> order;
    // linear: m^{(r)} = coefficient * eps_0
    double coefficient = 0.0;
    // markov: m^{(r)}(x_{-1}, x_0) = g_hat(x_0) - (P g_hat)(x_{-1})
    Eigen::VectorXd g_hat;
    Eigen::VectorXd p_g_hat;

    [[nodiscard]] bool is_linear() const { return g_hat.size() == 0; }
    [[nodiscard]] double markov_increment(int previous, int current) const {
        return g_hat(current) - p_g_hat(previous);
    }
};

MartingaleApprox martingale_increment(const Model& model, std::optional<int> order);

/// M_1..M_n on the realization that produced the quenched path; n may be
/// shorter than the realization (prefix), never longer.
std::vector<double> evaluate_martingale(const Model& model, const MartingaleApprox& approx,
                                        const PastFixture& fixture,
                                        const QuenchedRealization& realization, int n);

/// sigma^2 = ||m||_2^2.
double sigma_squared(const Model& model);

/// ||m - m^{(r)}||_2 computed exactly.
double martingale_truncation_error(const Model& model, int order);

struct ProjectionNormEstimate {
    int k = 0;
    double squared_estimate = 0.0;
    double squared_standard_error = 0.0;
    double norm_estimate = 0.0;
    double exact_norm = 0.0;
    [[nodiscard]] double z_score() const;
};

/// Nested conditional Monte Carlo estimate of ||P_0(U^k f)||_2^2.
///
/// For each of M outer draws of the past, two independent pairs of inner
/// averages (L draws each) estimate E_0(U^k f) and E_{-1}(U^k f); the product
/// of the two differences is unbiased for (P_0 U^k f)^2.
ProjectionNormEstimate estimate_projection_norm(const Model& model, int k, long M, int inner,
                                                const RandomStream& root, unsigned workers);

struct VarianceRatioEstimate {
    double ratio = 0.0;  // mean of S_n^2 / n
    double standard_error = 0.0;
};

/// E(S_n^2) / n over M stationary paths; replication r uses root.child(r).
VarianceRatioEstimate estimate_variance_ratio(const Model& model, int n, long M,
                                              const RandomStream& root, unsigned workers);

}  // namespace qlab
