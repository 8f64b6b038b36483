#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "qlab/random.hpp"
#include "qlab/stats.hpp"

using namespace qlab;

namespace {

// Inverse of the standard normal CDF by bisection on the library CDF's
// independent erf form.
double phi(double z) { return 0.5 * (1.0 + std::erf(z / std::sqrt(2.0))); }

double quantile(double p) {
    double lo = -40, hi = 40;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (phi(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<double> normals(std::uint64_t seed, int M, double sd = 1.0) {
    RandomStream s = derive_stream(seed, {});
    std::vector<double> x(M);
    for (auto& v : x) v = sd * standard_normal(s);
    return x;
}

}  // namespace

TEST_CASE("normal and Brownian sup CDFs") {
    CHECK(normal_cdf(1.96) == doctest::Approx(0.9750).epsilon(1e-4));
    CHECK(normal_cdf(0.0) == 0.5);
    CHECK(normal_cdf(-40.0) >= 0.0);
    CHECK(brownian_sup_cdf(0.0, 1.0) == 0.0);
    CHECK(brownian_sup_cdf(-1.0, 1.0) == 0.0);
    CHECK(brownian_sup_cdf(2.0, 2.0) == doctest::Approx(2 * phi(1.0) - 1).epsilon(1e-12));
    CHECK(brownian_sup_cdf(1.0, 1.0) == doctest::Approx(0.6827).epsilon(1e-4));
    CHECK_THROWS_AS(brownian_sup_cdf(1.0, 0.0), std::domain_error);
}

TEST_CASE("Kolmogorov distribution") {
    CHECK(kolmogorov_cdf(0.0) == 0.0);
    CHECK(kolmogorov_cdf(1.36) == doctest::Approx(0.95).epsilon(1e-3));
    CHECK(kolmogorov_cdf(1.63) == doctest::Approx(0.99).epsilon(1e-3));
    // both series branches agree near the switch
    CHECK(kolmogorov_cdf(1.0 - 1e-9) == doctest::Approx(kolmogorov_cdf(1.0)).epsilon(1e-7));
    double prev = 0.0;
    for (double x = 0.05; x < 3.0; x += 0.05) {
        const double v = kolmogorov_cdf(x);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("empirical CDF") {
    const EmpiricalSample e({3.0, 1.0, 2.0, 2.0});
    CHECK(e.cdf(0.5) == 0.0);
    CHECK(e.cdf(1.0) == 0.25);
    CHECK(e.cdf(2.0) == 0.75);
    CHECK(e.cdf(2.5) == 0.75);
    CHECK(e.cdf(3.0) == 1.0);
    CHECK_THROWS(EmpiricalSample({1.0, NAN}));
}

TEST_CASE("one-sample KS") {
    const int M = 1000;
    std::vector<double> q(M);
    for (int i = 0; i < M; ++i) q[i] = quantile((i + 0.5) / M);
    const auto exact = ks_one_sample(EmpiricalSample(q), [](double x) { return normal_cdf(x); });
    CHECK(exact.statistic == doctest::Approx(1.0 / (2 * M)).epsilon(1e-6));

    int passes = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto r = ks_one_sample(EmpiricalSample(normals(100 + seed, 5000)), [](double x) { return normal_cdf(x); });
        if (r.statistic < 1.63 / std::sqrt(5000.0)) ++passes;
    }
    CHECK(passes >= 96);

    const auto power = ks_one_sample(EmpiricalSample(normals(300, 5000)),
                                     [](double x) { return normal_cdf(x, 2.0); });
    CHECK(power.p_value < 1e-6);

    CHECK_THROWS(ks_one_sample(EmpiricalSample({1.0, 2.0}), [](double x) { return normal_cdf(x); }));
}

TEST_CASE("p-value is monotone in D") {
    double prev = 1.0;
    for (double d = 0.001; d < 0.1; d += 0.001) {
        const double p = 1.0 - kolmogorov_cdf(std::sqrt(5000.0) * d);
        CHECK(p <= prev);
        prev = p;
    }
}

TEST_CASE("two-sample KS") {
    const auto a = normals(400, 5000);
    const auto same = ks_two_sample(EmpiricalSample(a), EmpiricalSample(a));
    CHECK(same.statistic == 0.0);
    CHECK(same.p_value == 1.0);

    std::vector<double> lo(20), hi(20);
    for (int i = 0; i < 20; ++i) {
        lo[i] = i;
        hi[i] = 100 + i;
    }
    CHECK(ks_two_sample(EmpiricalSample(lo), EmpiricalSample(hi)).statistic == 1.0);

    int passes = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto r = ks_two_sample(EmpiricalSample(normals(500 + 2 * seed, 5000)),
                                     EmpiricalSample(normals(501 + 2 * seed, 5000)));
        if (r.p_value > 0.01) ++passes;
    }
    CHECK(passes >= 96);
}

TEST_CASE("reference CDFs") {
    ReferenceCdf n{ReferenceCdf::Kind::normal, 2.0};
    CHECK(n(0.0) == 0.5);
    CHECK(n(1.0) == n(1.0));
    ReferenceCdf b{ReferenceCdf::Kind::brownian_sup, 1.0};
    CHECK(b(1.0) == doctest::Approx(0.6827).epsilon(1e-4));
    const EmpiricalSample e({1.0, 2.0});
    ReferenceCdf emp{ReferenceCdf::Kind::empirical, 1.0, &e};
    CHECK(emp(1.5) == 0.5);
}
