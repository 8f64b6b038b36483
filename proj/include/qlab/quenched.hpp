// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qlab/models.hpp"
#include "qlab/projections.hpp"
#include "qlab/report.hpp"
#include "qlab/stats.hpp"

namespace qlab {

/// S_n(t) = S_[nt] + (nt - [nt]) f o theta^{[nt]+1} on t in [0, 1].
class InterpolatedPath {
  public:
    InterpolatedPath() = default;
    /// Uses the first n increments; throws std::domain_error if fewer exist.
    InterpolatedPath(std::span<const double> increments, int n);

    [[nodiscard]] int n() const { return static_cast<int>(increments_.size()); }
    /// grid()[k] = S_k, k = 0..n.
    [[nodiscard]] const std::vector<double>& grid() const { return grid_; }
    [[nodiscard]] const std::vector<double>& increments() const { return increments_; }
    /// Throws std::domain_error for t outside [0, 1].
    [[nodiscard]] double at(double t) const;

  private:
    friend InterpolatedPath centered_path(const Model&, const PastFixture&, const InterpolatedPath&);
    std::vector<double> increments_;
    std::vector<double> grid_;
};

/// S_bar_n(t) = S_n(t) - E_0(S_n(t)), with E_0 taken at the fixture.
InterpolatedPath centered_path(const Model& model, const PastFixture& fixture,
                               const InterpolatedPath& path);

enum class PathFunctional { endpoint, supremum, infimum, sup_abs, time_integral };

PathFunctional parse_functional(const std::string& name);
std::string to_string(PathFunctional functional);

/// Functional of a piecewise-linear path given by its grid values at k/n.
/// Extremes of such a path are attained on the grid; the integral is exact
/// (trapezoid).
double apply_functional(PathFunctional functional, std::span<const double> grid);

struct RunOptions {
    unsigned workers = 1;
    double alpha = 0.01;
};

/// Provenance fields copied into every report.
struct ReportContext {
    std::string model_digest;
    std::uint64_t seed = 0;
    std::string seed_path;
};

struct DistributionOutcome {
    ExperimentReport report;
    std::vector<double> sample;            // per replication, in replication order
    std::optional<ReferenceCdf> reference;  // analytic reference, if any
    std::vector<double> reference_sample;  // two-sample reference, if any
};

/// sigma W path functionals on a piecewise-linear Brownian path with grid_n
/// steps; replication r uses root.child(r).
std::vector<double> brownian_reference(PathFunctional functional, double sigma, int grid_n,
                                       long M_ref, const RandomStream& root, unsigned workers);

/// Endpoint law of S_bar_n / sqrt(n) under mu_x against Normal(0, sigma^2).
DistributionOutcome quenched_clt_experiment(const Model& model, const PastFixture& fixture, int n,
                                            long M, const RandomStream& root,
                                            const ReportContext& context,
                                            const RunOptions& options = {});

/// functional(S_bar_n(.) / sqrt(n)) under mu_x against functional(sigma W).
/// reference_root/M_ref are used only for functionals without a closed form.
DistributionOutcome quenched_wip_experiment(const Model& model, const PastFixture& fixture,
                                            PathFunctional functional, int n, long M,
                                            const RandomStream& root,
                                            const RandomStream& reference_root, long M_ref,
                                            const ReportContext& context,
                                            const RunOptions& options = {});

struct StrestPoint {
    int N = 0;
    double ratio = 0.0;  // R_N
    double standard_error = 0.0;
};

struct StrestOutcome {
    ExperimentReport report;
    std::vector<StrestPoint> points;
};

/// R_N = E_0[max_{n<=N} (S_bar_n - M_n)^2] / N by Monte Carlo on coupled
/// realizations; order nullopt is r = infinity.
StrestOutcome strest_experiment(const Model& model, const PastFixture& fixture,
                                std::optional<int> order, std::span<const int> Ns, long M,
                                const RandomStream& root, const ReportContext& context,
                                const RunOptions& options = {});

struct DriftRow {
    std::string fixture_digest;
    std::vector<double> ratios;  // |E_0(S_N)| / sqrt(N), per N
    bool vanishing = false;
};

struct DriftOutcome {
    ExperimentReport report;
    std::vector<int> Ns;
    std::vector<DriftRow> rows;
};

/// Exact |E_0(S_N)| / sqrt(N) table; "vanishing" when the ratio at the largest
/// N is below a quarter of the ratio at the smallest N, or both are < 1e-6.
DriftOutcome uncentered_drift_check(const Model& model, std::span<const PastFixture> fixtures,
                                    std::span<const int> Ns, const ReportContext& context);

struct DoobOutcome {
    ExperimentReport report;
    double lhs = 0.0;
    double lhs_standard_error = 0.0;
    double rhs = 0.0;  // sqrt(N) sum_i ((f_i^2)*)^{1/2}
    bool holds = false;
};

/// Monte Carlo (E_0 max_{n<=N} S_bar_n^2)^{1/2} against the maximal-function
/// bound, for chain models. The bound depends on (W_{-1}, W_0); it is
/// evaluated at every predecessor of the fixture state and the smallest
/// value is used. Linear models are unsupported (std::invalid_argument).
DoobOutcome doob_bound_check(const Model& model, const PastFixture& fixture, int N, long M,
                             const RandomStream& root, const ReportContext& context,
                             const RunOptions& options = {}, int maximal_truncation = 1000);

struct DecompositionOutcome {
    ExperimentReport report;
    double max_residual = 0.0;
    double truncation_bias = 0.0;
    int truncation_index = 0;  // number of projection terms kept
    bool holds = false;
};

/// Both sides of S_bar_m = sum_{i<m} sum_{j=1}^{m-i} U^j f_i on one
/// realization, max over m = 1..n.
DecompositionOutcome decomposition_identity_check(const Model& model, const PastFixture& fixture,
                                                  int n, RandomStream stream,
                                                  const ReportContext& context);

}  // namespace qlab
