// SPDX-License-Identifier: Apache-2.0
#include "qlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qlab {

namespace {

constexpr double kSeriesCutoff = 1e-10;

// 1 - K(x) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 x^2), summed directly so that
// small p-values keep their relative precision.
double kolmogorov_survival_series(double x) {
    double sum = 0.0;
    for (int j = 1; j < 1000; ++j) {
        const double term = std::exp(-2.0 * j * j * x * x);
        sum += (j % 2 == 1) ? term : -term;
        if (term < kSeriesCutoff) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

// K(x) = sqrt(2 pi) / x sum_{j>=1} exp(-(2j-1)^2 pi^2 / (8 x^2)).
double kolmogorov_cdf_theta(double x) {
    const double c = std::numbers::pi * std::numbers::pi / (8.0 * x * x);
    double sum = 0.0;
    for (int j = 1; j < 1000; ++j) {
        const double odd = 2.0 * j - 1.0;
        const double term = std::exp(-odd * odd * c);
        sum += term;
        if (term < kSeriesCutoff) break;
    }
    return std::clamp(std::sqrt(2.0 * std::numbers::pi) / x * sum, 0.0, 1.0);
}

double kolmogorov_survival(double x) {
    if (x <= 0.0) return 1.0;
    if (x < 1.0) return 1.0 - kolmogorov_cdf_theta(x);
    return kolmogorov_survival_series(x);
}

}  // namespace

EmpiricalSample::EmpiricalSample(std::vector<double> values) : values_(std::move(values)) {
    for (double v : values_) {
        if (std::isnan(v)) throw std::invalid_argument("empirical sample contains NaN");
    }
    std::sort(values_.begin(), values_.end());
}

double EmpiricalSample::cdf(double x) const {
    if (values_.empty()) return 0.0;
    const auto it = std::upper_bound(values_.begin(), values_.end(), x);
    return static_cast<double>(it - values_.begin()) / static_cast<double>(values_.size());
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_cdf(double x, double sigma) {
    if (!(sigma > 0.0)) throw std::domain_error("normal_cdf needs sigma > 0");
    return normal_cdf(x / sigma);
}

double brownian_sup_cdf(double a, double sigma) {
    if (!(sigma > 0.0)) throw std::domain_error("brownian_sup_cdf needs sigma > 0");
    if (a < 0.0) return 0.0;
    // 2 Phi(a/s) - 1 = erf(a / (s sqrt 2))
    return std::erf(a / (sigma * std::numbers::sqrt2));
}

double kolmogorov_cdf(double x) {
    if (x <= 0.0) return 0.0;
    if (x < 1.0) return kolmogorov_cdf_theta(x);
    return 1.0 - kolmogorov_survival_series(x);
}

KsResult ks_one_sample(const EmpiricalSample& sample, const Cdf& reference) {
    const std::size_t m = sample.size();
    if (m < 10) throw std::domain_error("KS test needs at least 10 observations");
    const double dm = static_cast<double>(m);
    const auto& xs = sample.values();
    double d = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double f = reference(xs[i]);
        d = std::max({d, static_cast<double>(i + 1) / dm - f, f - static_cast<double>(i) / dm});
    }
    KsResult out;
    out.statistic = d;
    out.effective_size = dm;
    out.p_value = kolmogorov_survival(d * std::sqrt(dm));
    return out;
}

KsResult ks_two_sample(const EmpiricalSample& a, const EmpiricalSample& b) {
    if (a.size() < 10 || b.size() < 10) {
        throw std::domain_error("KS test needs at least 10 observations per sample");
    }
    const auto& xa = a.values();
    const auto& xb = b.values();
    const double na = static_cast<double>(xa.size());
    const double nb = static_cast<double>(xb.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < xa.size() && j < xb.size()) {
        const double x = std::min(xa[i], xb[j]);
        while (i < xa.size() && xa[i] == x) ++i;
        while (j < xb.size() && xb[j] == x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    KsResult out;
    out.statistic = d;
    out.effective_size = na * nb / (na + nb);
    out.p_value = kolmogorov_survival(d * std::sqrt(out.effective_size));
    return out;
}

double ReferenceCdf::operator()(double x) const {
    switch (kind) {
        case Kind::normal: return normal_cdf(x, sigma);
        case Kind::brownian_sup: return brownian_sup_cdf(x, sigma);
        case Kind::empirical: return empirical->cdf(x);
    }
    return 0.0;
}

std::string ReferenceCdf::name() const {
    switch (kind) {
        case Kind::normal: return "normal";
        case Kind::brownian_sup: return "brownian-sup";
        case Kind::empirical: return "empirical";
    }
    return "unknown";
}

}  // namespace qlab
