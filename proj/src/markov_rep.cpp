// SPDX-License-Identifier: Apache-2.0
#include "qlab/markov_rep.hpp"

#include <algorithm>
#include <cmath>
#include <span>

namespace qlab {

namespace {

constexpr double kExactTol = 1e-12;

}  // namespace

TransitionOperator make_transition_operator(Eigen::MatrixXd matrix, Eigen::VectorXd reference) {
    const auto n = matrix.rows();
    if (matrix.cols() != n || reference.size() != n) {
        throw std::invalid_argument("transition operator dimensions disagree");
    }
    if ((matrix.array() < 0.0).any()) throw std::invalid_argument("operator is not positive");
    if ((matrix.rowwise().sum().array() - 1.0).abs().maxCoeff() > kExactTol) {
        throw std::invalid_argument("operator does not fix constants");
    }
    if ((reference.transpose() * matrix - reference.transpose()).cwiseAbs().maxCoeff() > kExactTol) {
        throw std::invalid_argument("operator does not preserve the reference measure");
    }
    return TransitionOperator{std::move(matrix), std::move(reference)};
}

TransitionOperator q_operator_from_model(const MarkovModel& model) {
    return make_transition_operator(model.transition(), model.stationary());
}

Eigen::MatrixXd predual_matrix(const TransitionOperator& op) {
    const auto n = op.matrix.rows();
    Eigen::MatrixXd t(n, n);
    for (Eigen::Index x = 0; x < n; ++x) {
        for (Eigen::Index y = 0; y < n; ++y) {
            t(x, y) = op.reference(y) * op.matrix(y, x) / op.reference(x);
        }
    }
    return t;
}

double l1_norm(const Eigen::VectorXd& h, const Eigen::VectorXd& weights) {
    return weights.dot(h.cwiseAbs());
}

DunfordSchwartzReport verify_dunford_schwartz(const TransitionOperator& op,
                                              const std::vector<Eigen::VectorXd>& test_functions) {
    if (test_functions.empty()) {
        throw std::invalid_argument("verify_dunford_schwartz needs at least one test function");
    }
    DunfordSchwartzReport report;
    for (std::size_t i = 0; i < test_functions.size(); ++i) {
        const Eigen::VectorXd& h = test_functions[i];
        const Eigen::VectorXd qh = op.apply(h);
        ContractionCheck c;
        c.l1_before = l1_norm(h, op.reference);
        c.l1_after = l1_norm(qh, op.reference);
        c.sup_before = h.cwiseAbs().maxCoeff();
        c.sup_after = qh.cwiseAbs().maxCoeff();
        c.passes = c.l1_after <= c.l1_before + kExactTol && c.sup_after <= c.sup_before + kExactTol;
        if (!c.passes) report.violations.push_back(i);
        report.checks.push_back(c);
    }
    return report;
}

MaximalFunction maximal_function(const TransitionOperator& op, const Eigen::VectorXd& h, int N) {
    if (N < 1) throw std::domain_error("maximal function truncation must be >= 1");
    MaximalFunction out;
    out.base = h;
    out.truncation = N;
    Eigen::VectorXd power = h.cwiseAbs();
    Eigen::VectorXd running = Eigen::VectorXd::Zero(h.size());
    out.values = Eigen::VectorXd::Zero(h.size());
    for (int n = 1; n <= N; ++n) {
        running += power;
        out.values = out.values.cwiseMax(running / n);
        if (n < N) power = op.apply(power);
    }
    return out;
}

HopfCheck hopf_check(const TransitionOperator& op, const MaximalFunction& maximal) {
    HopfCheck out;
    out.l1_norm = l1_norm(maximal.base, op.reference);
    std::vector<double> levels(maximal.values.data(), maximal.values.data() + maximal.values.size());
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    for (double level : levels) {
        if (level <= 0.0) continue;
        double mass = 0.0;
        for (Eigen::Index x = 0; x < maximal.values.size(); ++x) {
            if (maximal.values(x) >= level) mass += op.reference(x);
        }
        const double product = level * mass;
        out.levels.push_back({level, mass, product});
        out.sup_product = std::max(out.sup_product, product);
    }
    out.holds = out.sup_product <= out.l1_norm * (1.0 + kExactTol) + kExactTol;
    return out;
}

double weak_l2_tail(const Eigen::VectorXd& h, const Eigen::VectorXd& weights) {
    if (h.size() == 0) throw std::invalid_argument("weak_l2_tail needs a nonempty input");
    double best = 0.0;
    for (Eigen::Index i = 0; i < h.size(); ++i) {
        const double lambda = std::abs(h(i));
        if (lambda == 0.0) continue;
        double mass = 0.0;
        for (Eigen::Index j = 0; j < h.size(); ++j) {
            if (std::abs(h(j)) >= lambda) mass += weights(j);
        }
        best = std::max(best, lambda * lambda * mass);
    }
    return best;
}

double weak_l2_tail(std::span<const double> sample) {
    if (sample.empty()) throw std::invalid_argument("weak_l2_tail needs a nonempty input");
    std::vector<double> mags(sample.size());
    std::transform(sample.begin(), sample.end(), mags.begin(), [](double v) { return std::abs(v); });
    std::sort(mags.begin(), mags.end(), std::greater<>());
    const double m = static_cast<double>(mags.size());
    double best = 0.0;
    // After sorting descending, #{|h| >= mags[i]} is the last index of the
    // tie block containing i, plus one.
    std::size_t i = 0;
    while (i < mags.size()) {
        std::size_t j = i;
        while (j + 1 < mags.size() && mags[j + 1] == mags[i]) ++j;
        if (mags[i] > 0.0) best = std::max(best, mags[i] * mags[i] * static_cast<double>(j + 1) / m);
        i = j + 1;
    }
    return best;
}

MarkovPropertyCheck verify_markov_property(const MarkovModel& model, int n_max) {
    if (n_max < 1 || n_max > 4) throw std::domain_error("n_max must be in [1, 4]");
    const int s = model.states();
    const double work = std::pow(static_cast<double>(s), 2.0 * (n_max + 1));
    if (work > 5e8) throw std::domain_error("path enumeration too large for this state space");

    const TransitionOperator q = q_operator_from_model(model);
    const Eigen::MatrixXd& p = model.transition();
    const Eigen::VectorXd& pi = model.stationary();

    MarkovPropertyCheck out;
    std::vector<int> tuple, path;
    auto advance = [s](std::vector<int>& digits) {
        for (auto& d : digits) {
            if (++d < s) return true;
            d = 0;
        }
        return false;
    };

    for (int n = 1; n <= n_max; ++n) {
        double worst = 0.0;
        tuple.assign(n + 1, 0);
        do {
            // phi_k = indicator of state tuple[k]
            Eigen::VectorXd phi_last = Eigen::VectorXd::Zero(s);
            phi_last(tuple[n]) = 1.0;
            const Eigen::VectorXd q_phi_last = q.apply(phi_last);

            double lhs = 0.0;
            path.assign(n + 1, 0);
            do {
                double w = pi(path[0]);
                for (int k = 1; k <= n; ++k) w *= p(path[k - 1], path[k]);
                double phis = 1.0;
                for (int k = 0; k <= n; ++k) phis *= (path[k] == tuple[k]) ? 1.0 : 0.0;
                lhs += w * phis;
            } while (advance(path));

            double rhs = 0.0;
            path.assign(n, 0);
            do {
                double w = pi(path[0]);
                for (int k = 1; k < n; ++k) w *= p(path[k - 1], path[k]);
                double phis = 1.0;
                for (int k = 0; k < n; ++k) phis *= (path[k] == tuple[k]) ? 1.0 : 0.0;
                rhs += w * phis * q_phi_last(path[n - 1]);
            } while (advance(path));

            worst = std::max(worst, std::abs(lhs - rhs));
            ++out.tuples_checked;
        } while (advance(tuple));
        out.max_discrepancy_by_n.push_back(worst);
        out.max_discrepancy = std::max(out.max_discrepancy, worst);
    }
    return out;
}

Eigen::VectorXd poisson_solve(const Eigen::MatrixXd& transition, const Eigen::VectorXd& g) {
    return poisson_solve(transition, stationary_distribution(transition), g);
}

Eigen::VectorXd poisson_solve(const Eigen::MatrixXd& transition, const Eigen::VectorXd& stationary,
                              const Eigen::VectorXd& g) {
    const auto n = transition.rows();
    const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
    if (std::abs(stationary.dot(g)) > 1e-10 * scale) {
        throw PoissonError("Poisson equation needs pi(g) = 0");
    }
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd fundamental =
        identity - transition + Eigen::VectorXd::Ones(n) * stationary.transpose();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(fundamental);
    if (lu.rank() < n) {
        throw PoissonError("I - P has a kernel larger than the constants");
    }
    Eigen::VectorXd g_hat = lu.solve(g);
    g_hat.array() -= stationary.dot(g_hat);
    const double residual = ((identity - transition) * g_hat - g).cwiseAbs().maxCoeff();
    if (residual > 1e-10 * scale) {
        throw PoissonError("Poisson solve residual " + std::to_string(residual) + " exceeds 1e-10");
    }
    return g_hat;
}

Eigen::MatrixXd pair_maximal_function(const Eigen::MatrixXd& transition, const Eigen::MatrixXd& H,
                                      int N) {
    if (N < 1) throw std::domain_error("maximal function truncation must be >= 1");
    const auto s = transition.rows();
    const Eigen::MatrixXd abs_h = H.cwiseAbs();
    // After one step the lifted iterate depends on the current state only:
    // (Q^i|H|)(a, b) = (P^{i-1} v)(b), v(b) = sum_y P(b, y) |H|(b, y).
    Eigen::VectorXd v = (transition.cwiseProduct(abs_h)).rowwise().sum();
    std::vector<Eigen::VectorXd> partial;  // partial[n-1](b) = sum_{i=1}^{n-1} Q^i |H|
    partial.reserve(static_cast<std::size_t>(N));
    Eigen::VectorXd running = Eigen::VectorXd::Zero(s);
    partial.push_back(running);
    for (int n = 2; n <= N; ++n) {
        running += v;
        partial.push_back(running);
        v = transition * v;
    }
    Eigen::MatrixXd out(s, s);
    for (Eigen::Index a = 0; a < s; ++a) {
        for (Eigen::Index b = 0; b < s; ++b) {
            double best = 0.0;
            for (int n = 1; n <= N; ++n) {
                best = std::max(best, (abs_h(a, b) + partial[n - 1](b)) / n);
            }
            out(a, b) = best;
        }
    }
    return out;
}

}  // namespace qlab
