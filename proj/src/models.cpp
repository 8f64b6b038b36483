// SPDX-License-Identifier: Apache-2.0
#include "qlab/models.hpp"

#include <cmath>
#include <stdexcept>

#include "qlab/digest.hpp"

namespace qlab {

namespace {

constexpr double kStochasticTol = 1e-12;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

int draw_from_cumulative(const double* cumulative, int size, double u) {
    for (int i = 0; i < size - 1; ++i) {
        if (u < cumulative[i]) return i;
    }
    return size - 1;
}

}  // namespace

LinearModel make_linear_model(std::vector<double> coeffs, InnovationDistribution innovation,
                              double tail_bound) {
    if (coeffs.empty()) throw InvalidModel("linear model needs at least one coefficient");
    for (double a : coeffs) {
        if (!std::isfinite(a)) throw InvalidModel("linear model coefficient is not finite");
    }
    if (!(tail_bound >= 0.0) || !std::isfinite(tail_bound)) {
        throw InvalidModel("tail_bound must be a nonnegative finite number");
    }
    return LinearModel{std::move(coeffs), innovation, tail_bound};
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& transition) {
    const auto n = transition.rows();
    Eigen::MatrixXd system = transition.transpose() - Eigen::MatrixXd::Identity(n, n);
    system.row(n - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(n - 1) = 1.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
    if (lu.rank() < n) throw InvalidModel("stationary distribution is not unique");
    return lu.solve(rhs);
}

bool is_primitive(const Eigen::MatrixXd& transition) {
    using Pattern = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;
    const auto n = transition.rows();
    auto boolean_product = [](const Pattern& a, const Pattern& b) {
        Pattern c = a * b;
        return Pattern(c.unaryExpr([](int v) { return v > 0 ? 1 : 0; }));
    };
    Pattern base = transition.unaryExpr([](double v) { return v > 0.0 ? 1 : 0; });
    // Wielandt: a primitive n x n matrix has P^k > 0 for k = (n-1)^2 + 1.
    long exponent = (n - 1) * (n - 1) + 1;
    Pattern result = Pattern::Identity(n, n);
    while (exponent > 0) {
        if (exponent & 1) result = boolean_product(result, base);
        base = boolean_product(base, base);
        exponent >>= 1;
    }
    return (result.array() > 0).all();
}

MarkovModel::MarkovModel(Eigen::MatrixXd transition, Eigen::VectorXd observable)
    : transition_(std::move(transition)), observable_(std::move(observable)) {
    const auto n = transition_.rows();
    if (n < 1 || transition_.cols() != n) throw InvalidModel("transition matrix must be square");
    if (n > kMaxStates) {
        throw InvalidModel("state space larger than " + std::to_string(kMaxStates));
    }
    if (observable_.size() != n) throw InvalidModel("observable length differs from state count");
    if (!transition_.allFinite() || !observable_.allFinite()) {
        throw InvalidModel("transition matrix and observable must be finite");
    }
    if ((transition_.array() < 0.0).any()) throw InvalidModel("transition matrix has negative entries");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(transition_.row(i).sum() - 1.0) > kStochasticTol) {
            throw InvalidModel("row " + std::to_string(i) + " of the transition matrix does not sum to 1");
        }
    }
    if (!is_primitive(transition_)) {
        throw InvalidModel("transition matrix is reducible or periodic");
    }
    stationary_ = stationary_distribution(transition_);
    if ((stationary_.transpose() * transition_ - stationary_.transpose()).cwiseAbs().maxCoeff() >
        kStochasticTol) {
        throw InvalidModel("stationary distribution solve is inaccurate");
    }
    if (std::abs(stationary_.dot(observable_)) > kStochasticTol) {
        throw InvalidModel("observable is not centered under the stationary distribution");
    }
    cumulative_.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            acc += transition_(i, j);
            cumulative_(j, i) = acc;  // column-major: row i of P lives in column i
        }
    }
    stationary_cumulative_.resize(n);
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        acc += stationary_(j);
        stationary_cumulative_(j) = acc;
    }
}

int MarkovModel::step(int from, RandomStream& stream) const {
    return draw_from_cumulative(cumulative_.col(from).data(), states(), stream.next_uniform());
}

int MarkovModel::draw_stationary(RandomStream& stream) const {
    return draw_from_cumulative(stationary_cumulative_.data(), states(), stream.next_uniform());
}

PastFixture sample_fixture(const Model& model, RandomStream& stream) {
    return std::visit(
        overloaded{
            [&](const LinearModel& m) -> PastFixture {
                return LinearPast{sample(stream, m.innovation, m.coeffs.size())};
            },
            [&](const MarkovModel& m) -> PastFixture {
                return MarkovPast{m.draw_stationary(stream)};
            },
        },
        model);
}

void check_fixture(const Model& model, const PastFixture& fixture) {
    if (const auto* lin = std::get_if<LinearModel>(&model)) {
        const auto* past = std::get_if<LinearPast>(&fixture);
        if (past == nullptr) throw InvalidModel("linear model needs a linear fixture");
        if (past->innovations.size() != lin->coeffs.size()) {
            throw InvalidModel("linear fixture must hold exactly J+1 innovations");
        }
    } else {
        const auto& chain = std::get<MarkovModel>(model);
        const auto* past = std::get_if<MarkovPast>(&fixture);
        if (past == nullptr) throw InvalidModel("markov model needs a state fixture");
        if (past->state < 0 || past->state >= chain.states()) {
            throw InvalidModel("fixture state out of range");
        }
    }
}

double conditional_expectation_E0(const Model& model, const PastFixture& fixture, int k) {
    if (k <= 0) throw std::domain_error("conditional_expectation_E0 requires k >= 1");
    check_fixture(model, fixture);
    if (const auto* lin = std::get_if<LinearModel>(&model)) {
        const auto& frozen = std::get<LinearPast>(fixture).innovations;
        double acc = 0.0;
        for (std::size_t j = static_cast<std::size_t>(k); j < lin->coeffs.size(); ++j) {
            acc += lin->coeffs[j] * frozen[j - k];
        }
        return acc;
    }
    const auto& chain = std::get<MarkovModel>(model);
    Eigen::VectorXd v = chain.observable();
    for (int i = 0; i < k; ++i) v = chain.transition() * v;
    return v(std::get<MarkovPast>(fixture).state);
}

std::vector<double> conditional_mean_E0_Sn(const Model& model, const PastFixture& fixture,
                                           int n) {
    if (n <= 0) throw std::domain_error("conditional_mean_E0_Sn requires n >= 1");
    check_fixture(model, fixture);
    std::vector<double> out(static_cast<std::size_t>(n));
    double running = 0.0;
    if (const auto* lin = std::get_if<LinearModel>(&model)) {
        const auto& frozen = std::get<LinearPast>(fixture).innovations;
        for (int k = 1; k <= n; ++k) {
            double term = 0.0;
            for (std::size_t j = static_cast<std::size_t>(k); j < lin->coeffs.size(); ++j) {
                term += lin->coeffs[j] * frozen[j - k];
            }
            running += term;
            out[k - 1] = running;
        }
        return out;
    }
    const auto& chain = std::get<MarkovModel>(model);
    const int x = std::get<MarkovPast>(fixture).state;
    Eigen::VectorXd v = chain.observable();
    for (int k = 1; k <= n; ++k) {
        v = chain.transition() * v;
        running += v(x);
        out[k - 1] = running;
    }
    return out;
}

QuenchedRealization sample_quenched_realization(const Model& model, const PastFixture& fixture,
                                                RandomStream& stream, int n) {
    if (n < 0) throw std::domain_error("path length must be nonnegative");
    check_fixture(model, fixture);
    QuenchedRealization out;
    out.values.resize(static_cast<std::size_t>(n));
    if (const auto* lin = std::get_if<LinearModel>(&model)) {
        const auto& frozen = std::get<LinearPast>(fixture).innovations;
        out.fresh_innovations = sample(stream, lin->innovation, static_cast<std::size_t>(n));
        const auto& fresh = out.fresh_innovations;
        const long J = static_cast<long>(lin->horizon());
        for (long k = 1; k <= n; ++k) {
            double acc = 0.0;
            for (long j = 0; j <= J; ++j) {
                const long idx = k - j;
                acc += lin->coeffs[j] * (idx >= 1 ? fresh[idx - 1] : frozen[-idx]);
            }
            out.values[k - 1] = acc;
        }
        return out;
    }
    const auto& chain = std::get<MarkovModel>(model);
    out.states.resize(static_cast<std::size_t>(n) + 1);
    out.states[0] = std::get<MarkovPast>(fixture).state;
    for (int k = 1; k <= n; ++k) {
        out.states[k] = chain.step(out.states[k - 1], stream);
        out.values[k - 1] = chain.observable()(out.states[k]);
    }
    return out;
}

std::vector<double> sample_quenched_path(const Model& model, const PastFixture& fixture,
                                         RandomStream& stream, int n) {
    return sample_quenched_realization(model, fixture, stream, n).values;
}

std::vector<double> sample_stationary_path(const Model& model, RandomStream& stream, int n) {
    if (n < 0) throw std::domain_error("path length must be nonnegative");
    const PastFixture past = sample_fixture(model, stream);
    return sample_quenched_path(model, past, stream, n);
}

double observable_variance(const Model& model) {
    if (const auto* lin = std::get_if<LinearModel>(&model)) {
        double acc = 0.0;
        for (double a : lin->coeffs) acc += a * a;
        return acc * lin->innovation.variance();
    }
    const auto& chain = std::get<MarkovModel>(model);
    return chain.stationary().dot(chain.observable().cwiseAbs2());
}

std::string fixture_digest(const PastFixture& fixture) {
    Fnv1a h;
    if (const auto* lin = std::get_if<LinearPast>(&fixture)) {
        h.update("linear");
        h.update(std::span<const double>(lin->innovations));
    } else {
        h.update("markov");
        h.update(static_cast<std::int64_t>(std::get<MarkovPast>(fixture).state));
    }
    return h.hex();
}

}  // namespace qlab
