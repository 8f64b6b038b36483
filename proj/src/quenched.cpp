// SPDX-License-Identifier: Apache-2.0
#include "qlab/quenched.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qlab/markov_rep.hpp"
#include "qlab/numeric.hpp"

namespace qlab {

namespace {

struct ConditionalDrift {
    std::vector<double> increments;  // E_0(U^k f), k = 1..n (index k-1)
    std::vector<double> sums;        // E_0(S_k), k = 1..n (index k-1)
};

ConditionalDrift conditional_drift(const Model& model, const PastFixture& fixture, int n) {
    ConditionalDrift out;
    if (n == 0) return out;
    out.sums = conditional_mean_E0_Sn(model, fixture, n);
    out.increments.resize(static_cast<std::size_t>(n));
    if (const auto* lin = std::get_if<LinearModel>(&model)) {
        const auto& frozen = std::get<LinearPast>(fixture).innovations;
        for (int k = 1; k <= n; ++k) {
            double acc = 0.0;
            for (std::size_t j = static_cast<std::size_t>(k); j < lin->coeffs.size(); ++j) {
                acc += lin->coeffs[j] * frozen[j - k];
            }
            out.increments[k - 1] = acc;
        }
    } else {
        const auto& chain = std::get<MarkovModel>(model);
        const int x = std::get<MarkovPast>(fixture).state;
        Eigen::VectorXd v = chain.observable();
        for (int k = 1; k <= n; ++k) {
            v = chain.transition() * v;
            out.increments[k - 1] = v(x);
        }
    }
    return out;
}

// Centered grid S_bar_k / scale, k = 0..n. The running sum is accumulated in
// the same order as InterpolatedPath so that both routes agree bitwise.
void centered_grid(std::span<const double> values, std::span<const double> drift_sums, double scale,
                   std::vector<double>& grid) {
    const std::size_t n = values.size();
    grid.resize(n + 1);
    grid[0] = 0.0;
    double running = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
        running += values[k - 1];
        grid[k] = (running - drift_sums[k - 1]) / scale;
    }
}

double require_sigma(const Model& model) {
    const double s2 = sigma_squared(model);
    return std::sqrt(s2);
}

std::string ks_verdict(double p_value, double alpha) { return p_value >= alpha ? "pass" : "fail"; }

}  // namespace

InterpolatedPath::InterpolatedPath(std::span<const double> increments, int n) {
    if (n < 0 || increments.size() < static_cast<std::size_t>(n)) {
        throw std::domain_error("interpolated path needs at least n increments");
    }
    increments_.assign(increments.begin(), increments.begin() + n);
    grid_.resize(static_cast<std::size_t>(n) + 1);
    grid_[0] = 0.0;
    double running = 0.0;
    for (int k = 1; k <= n; ++k) {
        running += increments_[k - 1];
        grid_[k] = running;
    }
}

double InterpolatedPath::at(double t) const {
    if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("path evaluated outside [0, 1]");
    const int n = this->n();
    if (n == 0) return 0.0;
    const double nt = static_cast<double>(n) * t;
    const int whole = std::min(static_cast<int>(std::floor(nt)), n);
    const double frac = nt - whole;
    if (whole == n || frac == 0.0) return grid_[whole];
    return grid_[whole] + frac * increments_[whole];  // increments_[whole] = f o theta^{whole+1}
}

InterpolatedPath centered_path(const Model& model, const PastFixture& fixture,
                               const InterpolatedPath& path) {
    const int n = path.n();
    const ConditionalDrift drift = conditional_drift(model, fixture, n);
    InterpolatedPath out;
    out.increments_.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) out.increments_[k] = path.increments_[k] - drift.increments[k];
    centered_grid(path.increments_, drift.sums, 1.0, out.grid_);
    return out;
}

PathFunctional parse_functional(const std::string& name) {
    if (name == "endpoint") return PathFunctional::endpoint;
    if (name == "supremum" || name == "sup") return PathFunctional::supremum;
    if (name == "infimum" || name == "inf") return PathFunctional::infimum;
    if (name == "sup-abs") return PathFunctional::sup_abs;
    if (name == "time-integral") return PathFunctional::time_integral;
    throw std::invalid_argument("unknown path functional '" + name + "'");
}

std::string to_string(PathFunctional functional) {
    switch (functional) {
        case PathFunctional::endpoint: return "endpoint";
        case PathFunctional::supremum: return "supremum";
        case PathFunctional::infimum: return "infimum";
        case PathFunctional::sup_abs: return "sup-abs";
        case PathFunctional::time_integral: return "time-integral";
    }
    return "endpoint";
}

double apply_functional(PathFunctional functional, std::span<const double> grid) {
    if (grid.empty()) return 0.0;
    switch (functional) {
        case PathFunctional::endpoint:
            return grid.back();
        case PathFunctional::supremum:
            return *std::max_element(grid.begin(), grid.end());
        case PathFunctional::infimum:
            return *std::min_element(grid.begin(), grid.end());
        case PathFunctional::sup_abs: {
            double best = 0.0;
            for (double v : grid) best = std::max(best, std::abs(v));
            return best;
        }
        case PathFunctional::time_integral: {
            const std::size_t n = grid.size() - 1;
            if (n == 0) return 0.0;
            CompensatedSum acc;
            for (std::size_t k = 0; k < n; ++k) acc.add(0.5 * (grid[k] + grid[k + 1]));
            return acc.value() / static_cast<double>(n);
        }
    }
    return 0.0;
}

std::vector<double> brownian_reference(PathFunctional functional, double sigma, int grid_n,
                                       long M_ref, const RandomStream& root, unsigned workers) {
    if (grid_n < 256) throw std::domain_error("brownian reference grid must have >= 256 steps");
    if (sigma < 0.0) throw std::domain_error("sigma must be nonnegative");
    if (M_ref < 0) throw std::domain_error("reference size must be nonnegative");
    std::vector<double> out(static_cast<std::size_t>(M_ref));
    const double step_sd = sigma / std::sqrt(static_cast<double>(grid_n));
    parallel_for(out.size(), workers, [&](std::size_t r) {
        RandomStream stream = root.child(r);
        std::vector<double> grid(static_cast<std::size_t>(grid_n) + 1);
        grid[0] = 0.0;
        for (int k = 1; k <= grid_n; ++k) grid[k] = grid[k - 1] + step_sd * standard_normal(stream);
        out[r] = apply_functional(functional, grid);
    });
    return out;
}

DistributionOutcome quenched_wip_experiment(const Model& model, const PastFixture& fixture,
                                            PathFunctional functional, int n, long M,
                                            const RandomStream& root,
                                            const RandomStream& reference_root, long M_ref,
                                            const ReportContext& context,
                                            const RunOptions& options) {
    if (M <= 0) throw std::domain_error("empty sample: replication count must be >= 1");
    if (n < 1) throw std::domain_error("path length must be >= 1");
    check_fixture(model, fixture);
    const double sigma = require_sigma(model);
    const ConditionalDrift drift = conditional_drift(model, fixture, n);
    const double scale = std::sqrt(static_cast<double>(n));

    DistributionOutcome out;
    out.sample.resize(static_cast<std::size_t>(M));
    parallel_for(out.sample.size(), options.workers, [&](std::size_t r) {
        RandomStream stream = root.child(r);
        const std::vector<double> values = sample_quenched_path(model, fixture, stream, n);
        std::vector<double> grid;
        centered_grid(values, drift.sums, scale, grid);
        out.sample[r] = apply_functional(functional, grid);
    });

    ExperimentReport& rep = out.report;
    rep.experiment = functional == PathFunctional::endpoint ? "quenched-clt" : "quenched-wip";
    rep.model_digest = context.model_digest;
    rep.fixture_digest = fixture_digest(fixture);
    rep.n = n;
    rep.M = M;
    rep.seed = context.seed;
    rep.seed_path = context.seed_path;
    rep.statistic = to_string(functional) + "(S_bar_n / sqrt(n))";
    const MeanEstimate est = mean_estimate(out.sample);
    rep.estimate = est.mean;
    rep.standard_error = est.standard_error;
    rep.details["functional"] = to_string(functional);
    rep.details["sigma2"] = sigma * sigma;
    rep.details["alpha"] = options.alpha;

    if (sigma == 0.0) {
        rep.verdict = "degenerate";
        rep.details["note"] = "sigma^2 = 0: the limit law is a point mass at 0, no KS test";
        return out;
    }

    EmpiricalSample empirical(out.sample);
    KsResult ks;
    if (functional == PathFunctional::endpoint || functional == PathFunctional::supremum) {
        ReferenceCdf ref;
        ref.kind = functional == PathFunctional::endpoint ? ReferenceCdf::Kind::normal
                                                          : ReferenceCdf::Kind::brownian_sup;
        ref.sigma = sigma;
        ks = ks_one_sample(empirical, ref);
        out.reference = ref;
        rep.details["reference"] = ref.name();
    } else {
        out.reference_sample =
            brownian_reference(functional, sigma, std::max(n, 256), M_ref, reference_root,
                               options.workers);
        ks = ks_two_sample(empirical, EmpiricalSample(out.reference_sample));
        rep.details["reference"] = "brownian-simulation";
        rep.details["M_ref"] = M_ref;
        rep.details["reference_seed_path"] = reference_root.describe();
    }
    rep.test_statistic = ks.statistic;
    rep.p_value = ks.p_value;
    rep.details["ks_effective_size"] = ks.effective_size;
    rep.verdict = ks_verdict(ks.p_value, options.alpha);
    return out;
}

DistributionOutcome quenched_clt_experiment(const Model& model, const PastFixture& fixture, int n,
                                            long M, const RandomStream& root,
                                            const ReportContext& context,
                                            const RunOptions& options) {
    return quenched_wip_experiment(model, fixture, PathFunctional::endpoint, n, M, root, root, 0,
                                   context, options);
}

StrestOutcome strest_experiment(const Model& model, const PastFixture& fixture,
                                std::optional<int> order, std::span<const int> Ns, long M,
                                const RandomStream& root, const ReportContext& context,
                                const RunOptions& options) {
    if (Ns.empty()) throw std::domain_error("strest needs at least one N");
    if (M <= 0) throw std::domain_error("empty sample: replication count must be >= 1");
    for (int N : Ns) {
        if (N < 1) throw std::domain_error("strest N must be >= 1");
    }
    check_fixture(model, fixture);
    const int max_n = *std::max_element(Ns.begin(), Ns.end());
    const MartingaleApprox approx = martingale_increment(model, order);
    const ConditionalDrift drift = conditional_drift(model, fixture, max_n);

    // maxima[r * Ns.size() + i] = max_{n <= Ns[i]} (S_bar_n - M_n)^2
    std::vector<double> maxima(static_cast<std::size_t>(M) * Ns.size());
    parallel_for(static_cast<std::size_t>(M), options.workers, [&](std::size_t r) {
        RandomStream stream = root.child(r);
        const QuenchedRealization real = sample_quenched_realization(model, fixture, stream, max_n);
        const std::vector<double> mart = evaluate_martingale(model, approx, fixture, real, max_n);
        std::vector<double> running_max(static_cast<std::size_t>(max_n));
        double s = 0.0, best = 0.0;
        for (int k = 1; k <= max_n; ++k) {
            s += real.values[k - 1];
            const double d = (s - drift.sums[k - 1]) - mart[k - 1];
            best = std::max(best, d * d);
            running_max[k - 1] = best;
        }
        for (std::size_t i = 0; i < Ns.size(); ++i) {
            maxima[r * Ns.size() + i] = running_max[Ns[i] - 1];
        }
    });

    StrestOutcome out;
    std::vector<double> column(static_cast<std::size_t>(M));
    for (std::size_t i = 0; i < Ns.size(); ++i) {
        for (long r = 0; r < M; ++r) column[r] = maxima[r * Ns.size() + i];
        const MeanEstimate est = mean_estimate(column);
        out.points.push_back({Ns[i], est.mean / Ns[i], est.standard_error / Ns[i]});
    }

    bool all_zero = true, decreasing = true;
    for (std::size_t i = 0; i < out.points.size(); ++i) {
        if (out.points[i].ratio > 1e-12) all_zero = false;
        if (i > 0 && !(out.points[i].ratio < out.points[i - 1].ratio)) decreasing = false;
    }
    const bool halved = out.points.size() < 2 || out.points.back().ratio < out.points.front().ratio / 2.0;

    ExperimentReport& rep = out.report;
    rep.experiment = "strest";
    rep.model_digest = context.model_digest;
    rep.fixture_digest = fixture_digest(fixture);
    rep.n = max_n;
    rep.M = M;
    rep.seed = context.seed;
    rep.seed_path = context.seed_path;
    rep.statistic = "R_N = E_0[max_{n<=N} (S_bar_n - M_n)^2] / N";
    rep.estimate = out.points.back().ratio;
    rep.standard_error = out.points.back().standard_error;
    rep.verdict = (all_zero || (decreasing && halved)) ? "pass" : "fail";
    rep.details["order"] = order ? nlohmann::json(*order) : nlohmann::json("infinity");
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : out.points) {
        pts.push_back({{"N", p.N}, {"R_N", p.ratio}, {"standard_error", p.standard_error}});
    }
    rep.details["points"] = pts;
    return out;
}

DriftOutcome uncentered_drift_check(const Model& model, std::span<const PastFixture> fixtures,
                                    std::span<const int> Ns, const ReportContext& context) {
    if (Ns.empty()) throw std::domain_error("drift check needs at least one N");
    for (int N : Ns) {
        if (N < 1) throw std::domain_error("drift N must be >= 1");
    }
    DriftOutcome out;
    out.Ns.assign(Ns.begin(), Ns.end());
    const int max_n = *std::max_element(Ns.begin(), Ns.end());
    const auto smallest = std::min_element(Ns.begin(), Ns.end()) - Ns.begin();
    const auto largest = std::max_element(Ns.begin(), Ns.end()) - Ns.begin();
    bool all_vanishing = true;
    double worst = 0.0;
    for (const PastFixture& fixture : fixtures) {
        const std::vector<double> sums = conditional_mean_E0_Sn(model, fixture, max_n);
        DriftRow row;
        row.fixture_digest = fixture_digest(fixture);
        for (int N : Ns) row.ratios.push_back(std::abs(sums[N - 1]) / std::sqrt(static_cast<double>(N)));
        const double first = row.ratios[smallest];
        const double last = row.ratios[largest];
        // Bounded drift gives exactly last = first / 4 across a 16x range of N.
        row.vanishing = (last <= 0.25 * first * (1.0 + 1e-12)) || (first < 1e-6 && last < 1e-6);
        all_vanishing = all_vanishing && row.vanishing;
        worst = std::max(worst, last);
        out.rows.push_back(std::move(row));
    }
    ExperimentReport& rep = out.report;
    rep.experiment = "drift";
    rep.model_digest = context.model_digest;
    rep.fixture_digest = fixtures.size() == 1 ? out.rows.front().fixture_digest : "multiple";
    rep.n = max_n;
    rep.M = static_cast<long>(fixtures.size());
    rep.seed = context.seed;
    rep.seed_path = context.seed_path;
    rep.statistic = "|E_0(S_N)| / sqrt(N) at the largest N (max over fixtures)";
    rep.estimate = worst;
    rep.verdict = all_vanishing ? "pass" : "fail";
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : out.rows) {
        rows.push_back({{"fixture_digest", r.fixture_digest}, {"ratios", r.ratios}, {"vanishing", r.vanishing}});
    }
    rep.details["Ns"] = out.Ns;
    rep.details["rows"] = rows;
    return out;
}

DoobOutcome doob_bound_check(const Model& model, const PastFixture& fixture, int N, long M,
                             const RandomStream& root, const ReportContext& context,
                             const RunOptions& options, int maximal_truncation) {
    const auto* chain = std::get_if<MarkovModel>(&model);
    if (chain == nullptr) {
        throw std::invalid_argument(
            "doob check is only supported for markov models (the bound needs exact maximal functions)");
    }
    if (N < 1) throw std::domain_error("doob N must be >= 1");
    if (M < 2) throw std::domain_error("doob check needs M >= 2");
    check_fixture(model, fixture);
    const int x = std::get<MarkovPast>(fixture).state;
    const auto& p = chain->transition();
    const auto s = p.rows();

    // Right-hand side: sqrt(N) sum_i ((f_i^2)*)^{1/2} at (a, x) with
    // f_i(a, b) = (P^i g)(b) - (P^{i+1} g)(a), minimized over predecessors a.
    const double g_sup = chain->observable().cwiseAbs().maxCoeff();
    Eigen::VectorXd power = chain->observable();
    Eigen::VectorXd rhs_by_predecessor = Eigen::VectorXd::Zero(s);
    int terms = 0;
    constexpr int kMaxTerms = 100000;
    while (g_sup > 0.0 && terms < kMaxTerms) {
        const Eigen::VectorXd next = p * power;
        if (power.cwiseAbs().maxCoeff() < 1e-12 * g_sup && next.cwiseAbs().maxCoeff() < 1e-12 * g_sup) {
            break;
        }
        Eigen::MatrixXd h(s, s);
        for (Eigen::Index a = 0; a < s; ++a) {
            for (Eigen::Index b = 0; b < s; ++b) {
                const double f = power(b) - next(a);
                h(a, b) = f * f;
            }
        }
        const Eigen::MatrixXd star = pair_maximal_function(p, h, maximal_truncation);
        for (Eigen::Index a = 0; a < s; ++a) rhs_by_predecessor(a) += std::sqrt(star(a, x));
        power = next;
        ++terms;
    }
    double rhs_sum = INFINITY;
    int predecessor = -1;
    for (Eigen::Index a = 0; a < s; ++a) {
        if (p(a, x) > 0.0 && rhs_by_predecessor(a) < rhs_sum) {
            rhs_sum = rhs_by_predecessor(a);
            predecessor = static_cast<int>(a);
        }
    }
    if (g_sup == 0.0) rhs_sum = 0.0;
    const double rhs = std::sqrt(static_cast<double>(N)) * rhs_sum;

    const ConditionalDrift drift = conditional_drift(model, fixture, N);
    std::vector<double> maxima(static_cast<std::size_t>(M));
    parallel_for(maxima.size(), options.workers, [&](std::size_t r) {
        RandomStream stream = root.child(r);
        const std::vector<double> values = sample_quenched_path(model, fixture, stream, N);
        double running = 0.0, best = 0.0;
        for (int k = 1; k <= N; ++k) {
            running += values[k - 1];
            const double c = running - drift.sums[k - 1];
            best = std::max(best, c * c);
        }
        maxima[r] = best;
    });
    const MeanEstimate est = mean_estimate(maxima);

    DoobOutcome out;
    out.lhs = std::sqrt(std::max(0.0, est.mean));
    out.lhs_standard_error = out.lhs > 0.0 ? est.standard_error / (2.0 * out.lhs) : 0.0;
    out.rhs = rhs;
    const double relative_se = out.lhs > 0.0 ? out.lhs_standard_error / out.lhs : 0.0;
    out.holds = out.lhs <= rhs * (1.0 + 3.0 * relative_se);

    ExperimentReport& rep = out.report;
    rep.experiment = "doob";
    rep.model_digest = context.model_digest;
    rep.fixture_digest = fixture_digest(fixture);
    rep.n = N;
    rep.M = M;
    rep.seed = context.seed;
    rep.seed_path = context.seed_path;
    rep.statistic = "(E_0 max_{n<=N} S_bar_n^2)^{1/2}";
    rep.estimate = out.lhs;
    rep.standard_error = out.lhs_standard_error;
    rep.test_statistic = out.rhs > 0.0 ? out.lhs / out.rhs : 0.0;
    rep.verdict = out.holds ? "pass" : "fail";
    rep.details["rhs"] = out.rhs;
    rep.details["rhs_with_doob_factor_2"] = 2.0 * out.rhs;
    rep.details["holds_with_doob_factor_2"] = out.lhs <= 2.0 * rhs * (1.0 + 3.0 * relative_se);
    rep.details["projection_terms"] = terms;
    rep.details["predecessor_state"] = predecessor;
    nlohmann::json by_predecessor = nlohmann::json::object();
    for (Eigen::Index a = 0; a < s; ++a) {
        if (p(a, x) > 0.0) {
            by_predecessor[std::to_string(a)] = std::sqrt(static_cast<double>(N)) * rhs_by_predecessor(a);
        }
    }
    rep.details["rhs_by_predecessor"] = by_predecessor;
    rep.details["maximal_truncation"] = maximal_truncation;
    return out;
}

DecompositionOutcome decomposition_identity_check(const Model& model, const PastFixture& fixture,
                                                  int n, RandomStream stream,
                                                  const ReportContext& context) {
    if (n < 1) throw std::domain_error("decomposition check needs n >= 1");
    check_fixture(model, fixture);
    const std::string seed_path = stream.describe();
    const QuenchedRealization real = sample_quenched_realization(model, fixture, stream, n);
    const ConditionalDrift drift = conditional_drift(model, fixture, n);

    DecompositionOutcome out;
    std::vector<double> lhs(static_cast<std::size_t>(n));
    {
        double running = 0.0;
        for (int m = 1; m <= n; ++m) {
            running += real.values[m - 1];
            lhs[m - 1] = running - drift.sums[m - 1];
        }
    }

    if (const auto* lin = std::get_if<LinearModel>(&model)) {
        // U^j f_i = a_i eps_j; fresh prefix sums of eps.
        std::vector<double> eps_prefix(static_cast<std::size_t>(n) + 1, 0.0);
        for (int j = 1; j <= n; ++j) eps_prefix[j] = eps_prefix[j - 1] + real.fresh_innovations[j - 1];
        const int kept = static_cast<int>(std::min<std::size_t>(lin->coeffs.size(), n));
        for (int m = 1; m <= n; ++m) {
            double rhs = 0.0;
            for (int i = 0; i < std::min(m, kept); ++i) rhs += lin->coeffs[i] * eps_prefix[m - i];
            out.max_residual = std::max(out.max_residual, std::abs(lhs[m - 1] - rhs));
        }
        out.truncation_index = kept;
        out.truncation_bias = n * lin->tail_bound * lin->innovation.stddev();
    } else {
        const auto& chain = std::get<MarkovModel>(model);
        const auto& p = chain.transition();
        const double g_sup = chain.observable().cwiseAbs().maxCoeff();
        // powers[i] = P^i g, for i = 0..n
        std::vector<Eigen::VectorXd> powers;
        powers.push_back(chain.observable());
        for (int i = 1; i <= n; ++i) powers.push_back(p * powers.back());
        int kept = n;
        for (int i = 0; i < n; ++i) {
            if (powers[i].cwiseAbs().maxCoeff() < 1e-12 * std::max(g_sup, 1e-300)) {
                kept = i;
                break;
            }
        }
        if (g_sup == 0.0) kept = 0;
        // Dropped terms i in [kept, m-1] contribute at most
        // (m - i)(|P^i g|_inf + |P^{i+1} g|_inf) each.
        for (int i = kept; i < n; ++i) {
            out.truncation_bias += (n - i) * (powers[i].cwiseAbs().maxCoeff() +
                                              powers[i + 1].cwiseAbs().maxCoeff());
        }
        const auto& w = real.states;
        for (int m = 1; m <= n; ++m) {
            double rhs = 0.0;
            for (int i = 0; i < std::min(m, kept); ++i) {
                for (int j = 1; j <= m - i; ++j) {
                    rhs += powers[i](w[j]) - powers[i + 1](w[j - 1]);
                }
            }
            out.max_residual = std::max(out.max_residual, std::abs(lhs[m - 1] - rhs));
        }
        out.truncation_index = kept;
    }
    out.holds = out.max_residual <= 1e-9 + out.truncation_bias;

    ExperimentReport& rep = out.report;
    rep.experiment = "identity";
    rep.model_digest = context.model_digest;
    rep.fixture_digest = fixture_digest(fixture);
    rep.n = n;
    rep.M = 1;
    rep.seed = context.seed;
    rep.seed_path = seed_path;
    rep.statistic = "max_m |S_bar_m - sum_i sum_j U^j f_i|";
    rep.estimate = out.max_residual;
    rep.verdict = out.holds ? "pass" : "fail";
    rep.details["truncation_bias"] = out.truncation_bias;
    rep.details["projection_terms_kept"] = out.truncation_index;
    rep.details["tolerance"] = 1e-9 + out.truncation_bias;
    return out;
}

}  // namespace qlab
