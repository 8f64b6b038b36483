#include <cmath>
#include <numeric>

#include "doctest.h"
#include "fixtures.hpp"
#include "qlab/numeric.hpp"
#include "qlab/projections.hpp"

using namespace qlab;
using namespace qlab::testing;

namespace {

// ||P_0 U^k f||^2 = pi((P^k g)^2) - pi((P^{k+1} g)^2), a different route
// from the double sum used by the library.
double variance_identity_norm(const MarkovModel& c, int k) {
    Eigen::VectorXd pk = c.observable();
    for (int i = 0; i < k; ++i) pk = c.transition() * pk;
    const Eigen::VectorXd pk1 = c.transition() * pk;
    return std::sqrt(c.stationary().dot(pk.cwiseAbs2()) - c.stationary().dot(pk1.cwiseAbs2()));
}

// pi(g^2) + 2 sum_k pi(g P^k g)
double autocovariance_sigma2(const MarkovModel& c) {
    double s = c.stationary().dot(c.observable().cwiseAbs2());
    Eigen::VectorXd pk = c.observable();
    for (int k = 1; k < 5000; ++k) {
        pk = c.transition() * pk;
        s += 2.0 * c.stationary().dot(c.observable().cwiseProduct(pk));
    }
    return s;
}

}  // namespace

TEST_CASE("projection norm closed forms") {
    const auto id = projection_norms(identity_model(), 3);
    CHECK(id.norms == std::vector<double>{1.0, 0.0, 0.0, 0.0});

    const auto rho = projection_norms(rho_model(), 40);
    for (int k = 0; k <= 40; ++k) CHECK(rho.norms[k] == doctest::Approx(std::pow(0.5, k)).epsilon(1e-14));
    const auto past = projection_norms(rho_model(), 45);
    CHECK(past.norms[44] == 0.0);
    CHECK(past.bias[44] == doctest::Approx(std::pow(0.5, 40)));

    const auto chain = projection_norms(two_state(), 30);
    for (int k = 0; k <= 30; ++k) {
        CHECK(chain.norms[k] == doctest::Approx(std::sqrt(0.84) * std::pow(0.4, k)).epsilon(1e-12));
    }
}

TEST_CASE("projection norms agree with the variance identity on random chains") {
    RandomStream s = derive_stream(40, {});
    for (int t = 0; t < 5; ++t) {
        const MarkovModel c = random_chain(3 + t, s);
        const auto series = projection_norms(Model(c), 12);
        for (int k = 0; k <= 12; ++k) {
            CHECK(series.norms[k] == doctest::Approx(variance_identity_norm(c, k)).epsilon(1e-9).scale(1e-12));
        }
    }
}

TEST_CASE("hannan sums and verdicts") {
    std::vector<double> geo(61);
    for (int k = 0; k <= 60; ++k) geo[k] = std::pow(0.5, k);
    const auto g = classify_series(geo);
    CHECK(std::abs(g.total() - 2.0) <= std::pow(2.0, -59));
    CHECK(g.verdict == Summability::summable);
    CHECK(g.tail_fit == TailFit::geometric);

    std::vector<double> harm(201);
    for (int k = 0; k <= 200; ++k) harm[k] = 1.0 / (k + 1);
    const auto h = classify_series(harm);
    CHECK(h.total() > 5.0);
    CHECK(h.total() == doctest::Approx(std::log(201.0) + 0.5772156649).epsilon(0.01));
    CHECK(h.verdict == Summability::diverging);

    const auto single = classify_series(std::vector<double>{1.3, 0.0, 0.0, 0.0});
    CHECK(single.total() == 1.3);
    CHECK(single.verdict == Summability::summable);
    CHECK(single.finite_support);

    std::vector<double> p2(201);
    for (int k = 0; k <= 200; ++k) p2[k] = 1.0 / std::pow(k + 1, 2.0);
    CHECK(classify_series(p2).verdict == Summability::inconclusive);

    CHECK(hannan_verdict(rho_model()).verdict == Summability::summable);
    CHECK(hannan_verdict(two_state()).verdict == Summability::summable);
}

TEST_CASE("mw criterion") {
    const auto id = mw_criterion(identity_model(), 20);
    CHECK(id.summary.total() == 0.0);

    const auto rho = mw_criterion(rho_model(), 60);
    for (int n = 1; n <= 30; ++n) {
        CHECK(rho.terms[n - 1] ==
              doctest::Approx(std::pow(0.5, n) / std::sqrt(0.75) / std::sqrt(n)).epsilon(1e-9));
    }
    CHECK(rho.summary.total() < 1.34);
    CHECK(rho.summary.verdict == Summability::summable);

    const auto chain = mw_criterion(two_state(), 60);
    for (int n = 1; n <= 30; ++n) CHECK(chain.conditional_norms[n - 1] == doctest::Approx(std::pow(0.4, n)));
    CHECK(chain.summary.verdict == Summability::summable);
}

TEST_CASE("martingale increment") {
    CHECK(martingale_increment(identity_model(), std::nullopt).coefficient == 1.0);
    CHECK(martingale_increment(rho_model(), std::nullopt).coefficient == doctest::Approx(2.0).epsilon(1e-11));
    CHECK(martingale_increment(rho_model(), 2).coefficient == doctest::Approx(1.75));

    const Model chain = two_state();
    const auto m = martingale_increment(chain, std::nullopt);
    CHECK(m.g_hat(0) == doctest::Approx(1.0 / 0.6).epsilon(1e-12));
    CHECK(m.g_hat(1) == doctest::Approx(-1.0 / 0.6).epsilon(1e-12));
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            const double expected = ((b == 0 ? 1.0 : -1.0) - 0.4 * (a == 0 ? 1.0 : -1.0)) / 0.6;
            CHECK(m.markov_increment(a, b) == doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("martingale increments have zero conditional mean") {
    RandomStream s = derive_stream(41, {});
    for (int t = 0; t < 4; ++t) {
        const MarkovModel c = random_chain(4, s);
        for (auto order : {std::optional<int>{}, std::optional<int>{3}}) {
            const auto m = martingale_increment(Model(c), order);
            for (int a = 0; a < 4; ++a) {
                double mean = 0.0;
                for (int b = 0; b < 4; ++b) mean += c.transition()(a, b) * m.markov_increment(a, b);
                CHECK(std::abs(mean) < 1e-12);
            }
        }
    }
}

TEST_CASE("hannan refusal for diverging series") {
    std::vector<double> a(201);
    for (int j = 0; j <= 200; ++j) a[j] = 1.0 / (j + 1);
    const Model harmonic = make_linear_model(a, InnovationDistribution(InnovationKind::gaussian, 1.0), 1.0);
    CHECK_THROWS_AS(martingale_increment(harmonic, std::nullopt), HannanRefusal);
    CHECK_NOTHROW(martingale_increment(harmonic, 10));
}

TEST_CASE("sigma squared") {
    CHECK(sigma_squared(identity_model()) == 1.0);
    const Model id2 = make_linear_model({1.0}, InnovationDistribution(InnovationKind::rademacher, 2.5));
    CHECK(sigma_squared(id2) == doctest::Approx(2.5));
    CHECK(sigma_squared(rho_model()) == doctest::Approx(4.0).epsilon(1e-10));
    CHECK(sigma_squared(two_state()) == doctest::Approx(7.0 / 3.0).epsilon(1e-12));

    RandomStream s = derive_stream(42, {});
    for (int t = 0; t < 5; ++t) {
        const MarkovModel c = random_chain(5, s);
        CHECK(sigma_squared(Model(c)) == doctest::Approx(autocovariance_sigma2(c)).epsilon(1e-9));
    }

    Eigen::MatrixXd P(2, 2);
    P << 0.7, 0.3, 0.3, 0.7;
    CHECK(sigma_squared(Model(MarkovModel(P, Eigen::VectorXd::Zero(2)))) == 0.0);
}

TEST_CASE("truncation error decreases in r") {
    for (const Model& m : {rho_model(), two_state()}) {
        double prev = INFINITY;
        for (int r = 0; r <= 12; ++r) {
            const double e = martingale_truncation_error(m, r);
            CHECK(e <= prev);
            prev = e;
        }
        CHECK(prev < 1e-3);
    }
    CHECK(martingale_truncation_error(two_state(), 0) ==
          doctest::Approx(std::sqrt(0.84) * 0.4 / 0.6).epsilon(1e-10));
}

TEST_CASE("evaluate_martingale") {
    const Model chain = two_state();
    const auto m = martingale_increment(chain, std::nullopt);
    RandomStream s = derive_stream(43, {});
    const auto real = sample_quenched_realization(chain, MarkovPast{1}, s, 20);
    const auto M = evaluate_martingale(chain, m, MarkovPast{1}, real, 20);
    double acc = 0.0;
    for (int l = 1; l <= 20; ++l) {
        acc += m.markov_increment(real.states[l - 1], real.states[l]);
        CHECK(M[l - 1] == doctest::Approx(acc).epsilon(1e-13));
    }
    CHECK(evaluate_martingale(chain, m, MarkovPast{1}, real, 0).empty());
    CHECK(evaluate_martingale(chain, m, MarkovPast{1}, real, 5).size() == 5);
    CHECK_THROWS_AS(evaluate_martingale(chain, m, MarkovPast{1}, real, 21), std::domain_error);
}

TEST_CASE("martingale property under mu_x") {
    const Model model = rho_model();
    const LinearPast past{std::vector<double>(41, 1.5)};
    const auto m = martingale_increment(model, std::nullopt);
    const long R = 20000;
    std::vector<double> incr(R);
    const RandomStream root = derive_stream(44, {});
    for (long r = 0; r < R; ++r) {
        RandomStream s = root.child(r);
        const auto real = sample_quenched_realization(model, past, s, 3);
        const auto M = evaluate_martingale(model, m, past, real, 3);
        incr[r] = M[2] - M[1];
    }
    const MeanEstimate e = mean_estimate(incr);
    CHECK(std::abs(e.mean) < 4.0 * e.standard_error);
}

TEST_CASE("nested Monte Carlo projection norms") {
    for (const Model& m : {rho_model(), two_state()}) {
        for (int k : {0, 1, 3}) {
            const auto est = estimate_projection_norm(m, k, 20000, 8, derive_stream(45, {static_cast<std::uint64_t>(k)}), 1);
            CHECK(std::abs(est.z_score()) < 4.0);
        }
    }
}

TEST_CASE("variance ratio Monte Carlo") {
    const auto est = estimate_variance_ratio(two_state(), 2000, 2000, derive_stream(46, {}), 1);
    CHECK(std::abs(est.ratio - 7.0 / 3.0) < 4.0 * est.standard_error + 0.01);
}
