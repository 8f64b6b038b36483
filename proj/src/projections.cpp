// SPDX-License-Identifier: Apache-2.0
#include "qlab/projections.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qlab/markov_rep.hpp"
#include "qlab/numeric.hpp"

namespace qlab {

namespace {

constexpr double kRelativeTail = 1e-6;

struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double rss = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit fit;
    fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    fit.intercept = my - fit.slope * mx;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (fit.intercept + fit.slope * x[i]);
        fit.rss += r * r;
    }
    return fit;
}

// Markov P_0 norm of a state function v: the increment v(y) - (Pv)(x).
double pair_increment_norm(const MarkovModel& chain, const Eigen::VectorXd& v) {
    const Eigen::VectorXd pv = chain.transition() * v;
    const auto& p = chain.transition();
    const auto& pi = chain.stationary();
    CompensatedSum acc;
    for (Eigen::Index x = 0; x < p.rows(); ++x) {
        for (Eigen::Index y = 0; y < p.cols(); ++y) {
            const double d = v(y) - pv(x);
            acc.add(pi(x) * p(x, y) * d * d);
        }
    }
    return std::sqrt(std::max(0.0, acc.value()));
}

Eigen::VectorXd poisson_solve_for(const MarkovModel& chain) {
    return poisson_solve(chain.transition(), chain.stationary(), chain.observable());
}

}  // namespace

std::string to_string(TailFit fit) {
    switch (fit) {
        case TailFit::geometric: return "geometric";
        case TailFit::polynomial: return "polynomial";
        case TailFit::none: return "none";
    }
    return "none";
}

std::string to_string(Summability verdict) {
    switch (verdict) {
        case Summability::summable: return "summable";
        case Summability::diverging: return "diverging";
        case Summability::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

ProjectionSeries projection_norms(const Model& model, int K) {
    if (K < 0) throw std::domain_error("projection horizon must be >= 0");
    ProjectionSeries out;
    out.norms.assign(static_cast<std::size_t>(K) + 1, 0.0);
    out.bias.assign(static_cast<std::size_t>(K) + 1, 0.0);
    if (const auto* lin = std::get_if<LinearModel>(&model)) {
        const double sigma = lin->innovation.stddev();
        for (int k = 0; k <= K; ++k) {
            if (static_cast<std::size_t>(k) < lin->coeffs.size()) {
                out.norms[k] = std::abs(lin->coeffs[k]) * sigma;
            } else {
                out.bias[k] = lin->tail_bound * sigma;
            }
        }
        return out;
    }
    const auto& chain = std::get<MarkovModel>(model);
    Eigen::VectorXd v = chain.observable();
    for (int k = 0; k <= K; ++k) {
        out.norms[k] = pair_increment_norm(chain, v);
        v = chain.transition() * v;
    }
    return out;
}

int default_projection_horizon(const Model& model) {
    if (const auto* lin = std::get_if<LinearModel>(&model)) {
        return static_cast<int>(lin->horizon());
    }
    const auto& chain = std::get<MarkovModel>(model);
    Eigen::VectorXd v = chain.observable();
    const double first = pair_increment_norm(chain, v);
    if (first == 0.0) return 0;
    constexpr int kCap = 4096;
    for (int k = 1; k < kCap; ++k) {
        v = chain.transition() * v;
        if (pair_increment_norm(chain, v) < 1e-13 * first) return std::max(k, 8);
    }
    return kCap;
}

SummabilityResult classify_series(std::span<const double> terms) {
    SummabilityResult out;
    out.partial_sums.resize(terms.size());
    CompensatedSum acc;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (!(terms[i] >= 0.0) || !std::isfinite(terms[i])) {
            throw std::invalid_argument("series terms must be finite and nonnegative");
        }
        acc.add(terms[i]);
        out.partial_sums[i] = acc.value();
    }
    if (terms.empty()) {
        out.verdict = Summability::summable;
        out.finite_support = true;
        return out;
    }
    const std::size_t K = terms.size() - 1;
    const double partial = out.total();

    // Exact finite support: a single term, or trailing exact zeros.
    if (K == 0 || terms.back() == 0.0) {
        out.finite_support = true;
        out.verdict = Summability::summable;
        return out;
    }

    std::vector<double> kx, logx, logy;
    for (std::size_t k = K - K / 2; k <= K; ++k) {
        if (terms[k] <= 0.0) continue;
        kx.push_back(static_cast<double>(k));
        logx.push_back(std::log(static_cast<double>(k) + 1.0));
        logy.push_back(std::log(terms[k]));
    }
    if (kx.size() < 3) return out;

    const LineFit geo = least_squares(kx, logy);
    const LineFit poly = least_squares(logx, logy);
    const double next = static_cast<double>(K) + 1.0;
    if (geo.rss <= poly.rss) {
        out.tail_fit = TailFit::geometric;
        out.fitted_rate = geo.slope;
        if (geo.slope >= 0.0) {
            out.verdict = Summability::diverging;
            out.tail_estimate = std::numeric_limits<double>::infinity();
            return out;
        }
        out.tail_estimate = std::exp(geo.intercept + geo.slope * next) / (1.0 - std::exp(geo.slope));
    } else {
        out.tail_fit = TailFit::polynomial;
        out.fitted_rate = poly.slope;
        // exponent -1 itself (harmonic decay) diverges; allow for fit roundoff
        if (poly.slope >= -1.0 - 1e-9) {
            out.verdict = Summability::diverging;
            out.tail_estimate = std::numeric_limits<double>::infinity();
            return out;
        }
        // integral of C (x + 1)^p from K + 1 to infinity
        out.tail_estimate = std::exp(poly.intercept) * std::pow(next + 1.0, poly.slope + 1.0) /
                            (-poly.slope - 1.0);
    }
    out.verdict = out.tail_estimate < kRelativeTail * partial ? Summability::summable
                                                             : Summability::inconclusive;
    return out;
}

SummabilityResult hannan_sum(const ProjectionSeries& series) {
    return classify_series(series.norms);
}

SummabilityResult hannan_verdict(const Model& model) {
    return hannan_sum(projection_norms(model, default_projection_horizon(model)));
}

MwResult mw_criterion(const Model& model, int N) {
    if (N < 1) throw std::domain_error("mw_criterion requires N >= 1");
    MwResult out;
    out.conditional_norms.resize(static_cast<std::size_t>(N));
    out.terms.resize(static_cast<std::size_t>(N));
    out.bias.assign(static_cast<std::size_t>(N), 0.0);
    if (const auto* lin = std::get_if<LinearModel>(&model)) {
        // tail sums of a_j^2 from the back
        const std::size_t J1 = lin->coeffs.size();
        std::vector<double> tail(J1 + 1, 0.0);
        for (std::size_t j = J1; j-- > 0;) tail[j] = tail[j + 1] + lin->coeffs[j] * lin->coeffs[j];
        const double sigma = lin->innovation.stddev();
        for (int n = 1; n <= N; ++n) {
            const double t = static_cast<std::size_t>(n) < J1 ? tail[n] : 0.0;
            out.conditional_norms[n - 1] = sigma * std::sqrt(t);
            out.bias[n - 1] = lin->tail_bound * sigma / std::sqrt(static_cast<double>(n));
        }
    } else {
        const auto& chain = std::get<MarkovModel>(model);
        Eigen::VectorXd v = chain.observable();
        for (int n = 1; n <= N; ++n) {
            v = chain.transition() * v;
            out.conditional_norms[n - 1] =
                std::sqrt(std::max(0.0, chain.stationary().dot(v.cwiseAbs2())));
        }
    }
    for (int n = 1; n <= N; ++n) {
        out.terms[n - 1] = out.conditional_norms[n - 1] / std::sqrt(static_cast<double>(n));
    }
    out.summary = classify_series(out.terms);
    return out;
}

MartingaleApprox martingale_increment(const Model& model, std::optional<int> order) {
    if (order && *order < 0) throw std::domain_error("martingale order must be >= 0");
    if (!order) {
        const SummabilityResult verdict = hannan_verdict(model);
        if (verdict.verdict == Summability::diverging) {
            throw HannanRefusal("projection norms diverge (" + to_string(verdict.tail_fit) +
                                " tail, rate " + std::to_string(verdict.fitted_rate) +
                                "); m = sum_k P_0(U^k f) is not defined");
        }
    }
    MartingaleApprox out;
    out.order = order;
    if (const auto* lin = std::get_if<LinearModel>(&model)) {
        const std::size_t last =
            order ? std::min<std::size_t>(static_cast<std::size_t>(*order), lin->horizon())
                  : lin->horizon();
        CompensatedSum acc;
        for (std::size_t k = 0; k <= last; ++k) acc.add(lin->coeffs[k]);
        out.coefficient = acc.value();
        return out;
    }
    const auto& chain = std::get<MarkovModel>(model);
    if (order) {
        Eigen::VectorXd power = chain.observable();
        out.g_hat = power;
        for (int k = 1; k <= *order; ++k) {
            power = chain.transition() * power;
            out.g_hat += power;
        }
    } else {
        out.g_hat = poisson_solve_for(chain);
    }
    out.p_g_hat = chain.transition() * out.g_hat;
    return out;
}

std::vector<double> evaluate_martingale(const Model& model, const MartingaleApprox& approx,
                                        const PastFixture& fixture,
                                        const QuenchedRealization& realization, int n) {
    if (n < 0 || static_cast<std::size_t>(n) > realization.values.size()) {
        throw std::domain_error("martingale length exceeds the realization");
    }
    check_fixture(model, fixture);
    std::vector<double> out(static_cast<std::size_t>(n));
    double running = 0.0;
    if (std::holds_alternative<LinearModel>(model)) {
        if (!approx.is_linear() || realization.fresh_innovations.size() != realization.values.size()) {
            throw std::domain_error("realization does not belong to a linear model");
        }
        for (int l = 0; l < n; ++l) {
            running += approx.coefficient * realization.fresh_innovations[l];
            out[l] = running;
        }
        return out;
    }
    if (approx.is_linear() || realization.states.size() != realization.values.size() + 1 ||
        realization.states[0] != std::get<MarkovPast>(fixture).state) {
        throw std::domain_error("realization does not belong to this chain and fixture");
    }
    for (int l = 1; l <= n; ++l) {
        running += approx.markov_increment(realization.states[l - 1], realization.states[l]);
        out[l - 1] = running;
    }
    return out;
}

double sigma_squared(const Model& model) {
    const MartingaleApprox approx = martingale_increment(model, std::nullopt);
    if (const auto* lin = std::get_if<LinearModel>(&model)) {
        return approx.coefficient * approx.coefficient * lin->innovation.variance();
    }
    const auto& chain = std::get<MarkovModel>(model);
    const double value = chain.stationary().dot(approx.g_hat.cwiseAbs2()) -
                         chain.stationary().dot(approx.p_g_hat.cwiseAbs2());
    return std::max(0.0, value);
}

double martingale_truncation_error(const Model& model, int order) {
    if (order < 0) throw std::domain_error("martingale order must be >= 0");
    if (const auto* lin = std::get_if<LinearModel>(&model)) {
        CompensatedSum acc;
        for (std::size_t k = static_cast<std::size_t>(order) + 1; k < lin->coeffs.size(); ++k) {
            acc.add(lin->coeffs[k]);
        }
        return std::abs(acc.value()) * lin->innovation.stddev();
    }
    const auto& chain = std::get<MarkovModel>(model);
    // g_hat - g_hat_r = P^{r+1} g_hat
    Eigen::VectorXd d = poisson_solve_for(chain);
    for (int k = 0; k <= order; ++k) d = chain.transition() * d;
    return pair_increment_norm(chain, d);
}

double ProjectionNormEstimate::z_score() const {
    const double exact_sq = exact_norm * exact_norm;
    if (squared_standard_error == 0.0) return squared_estimate == exact_sq ? 0.0 : INFINITY;
    return (squared_estimate - exact_sq) / squared_standard_error;
}

ProjectionNormEstimate estimate_projection_norm(const Model& model, int k, long M, int inner,
                                                const RandomStream& root, unsigned workers) {
    if (k < 0 || M < 2 || inner < 1) {
        throw std::domain_error("estimate_projection_norm needs k >= 0, M >= 2, inner >= 1");
    }
    std::vector<double> products(static_cast<std::size_t>(M));
    if (const auto* lin = std::get_if<LinearModel>(&model)) {
        const long J = static_cast<long>(lin->horizon());
        const auto& a = lin->coeffs;
        parallel_for(products.size(), workers, [&](std::size_t i) {
            RandomStream stream = root.child(i);
            // past[m] = eps_{-m}
            const std::vector<double> past = sample(stream, lin->innovation, a.size());
            // U^k f = sum_j a_j eps_{k-j}; split by whether k - j is frozen.
            double known_e0 = 0.0, known_em1 = 0.0;
            for (long j = k; j <= J; ++j) known_e0 += a[j] * past[j - k];
            for (long j = k + 1; j <= J; ++j) known_em1 += a[j] * past[j - k];
            // mean over fresh draws of sum_{j < fresh_terms} a_j eps_{k-j}
            auto inner_mean = [&](long fresh_terms) {
                double acc = 0.0;
                for (int l = 0; l < inner; ++l) {
                    double v = 0.0;
                    for (long j = 0; j < fresh_terms; ++j) {
                        const double eps = lin->innovation.draw(stream);
                        if (j <= J) v += a[j] * eps;
                    }
                    acc += v;
                }
                return acc / inner;
            };
            const double d1 = (known_e0 + inner_mean(k)) - (known_em1 + inner_mean(k + 1));
            const double d2 = (known_e0 + inner_mean(k)) - (known_em1 + inner_mean(k + 1));
            products[i] = d1 * d2;
        });
    } else {
        const auto& chain = std::get<MarkovModel>(model);
        const auto& g = chain.observable();
        parallel_for(products.size(), workers, [&](std::size_t i) {
            RandomStream stream = root.child(i);
            const int previous = chain.draw_stationary(stream);
            const int current = chain.step(previous, stream);
            auto inner_mean = [&](int start, int steps) {
                double acc = 0.0;
                for (int l = 0; l < inner; ++l) {
                    int w = start;
                    for (int s = 0; s < steps; ++s) w = chain.step(w, stream);
                    acc += g(w);
                }
                return acc / inner;
            };
            const double d1 = inner_mean(current, k) - inner_mean(previous, k + 1);
            const double d2 = inner_mean(current, k) - inner_mean(previous, k + 1);
            products[i] = d1 * d2;
        });
    }
    const MeanEstimate est = mean_estimate(products);
    ProjectionNormEstimate out;
    out.k = k;
    out.squared_estimate = est.mean;
    out.squared_standard_error = est.standard_error;
    out.norm_estimate = std::sqrt(std::max(0.0, est.mean));
    out.exact_norm = projection_norms(model, k).norms[k];
    return out;
}

VarianceRatioEstimate estimate_variance_ratio(const Model& model, int n, long M,
                                              const RandomStream& root, unsigned workers) {
    if (n < 1 || M < 2) throw std::domain_error("estimate_variance_ratio needs n >= 1 and M >= 2");
    std::vector<double> ratios(static_cast<std::size_t>(M));
    parallel_for(ratios.size(), workers, [&](std::size_t r) {
        RandomStream stream = root.child(r);
        const std::vector<double> path = sample_stationary_path(model, stream, n);
        const double s = compensated_sum(path);
        ratios[r] = s * s / n;
    });
    const MeanEstimate est = mean_estimate(ratios);
    return {est.mean, est.standard_error};
}

}  // namespace qlab
