// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace qlab {

/// Sorted sample; construction sorts.
class EmpiricalSample {
  public:
    EmpiricalSample() = default;
    explicit EmpiricalSample(std::vector<double> values);

    [[nodiscard]] std::size_t size() const { return values_.size(); }
    [[nodiscard]] const std::vector<double>& values() const { return values_; }
    /// Right-continuous ECDF: #{x_i <= x} / M.
    [[nodiscard]] double cdf(double x) const;

  private:
    std::vector<double> values_;
};

/// Phi(z) via erfc; absolute error well below 1e-7.
double normal_cdf(double z);
double normal_cdf(double x, double sigma);

/// P(sup_{t<=1} sigma W_t <= a) = 2 Phi(a / sigma) - 1 for a >= 0, else 0.
double brownian_sup_cdf(double a, double sigma);

/// Limiting Kolmogorov distribution K(x) = 1 - 2 sum_{j>=1} (-1)^{j-1} e^{-2 j^2 x^2}.
/// The alternating series is truncated once terms drop below 1e-10; for small x
/// the equivalent Jacobi theta form is used, which converges there.
double kolmogorov_cdf(double x);

struct KsResult {
    double statistic = 0.0;  // D
    double p_value = 1.0;
    double effective_size = 0.0;
};

using Cdf = std::function<double(double)>;

/// One-sample KS statistic against a continuous reference with asymptotic p-value.
KsResult ks_one_sample(const EmpiricalSample& sample, const Cdf& reference);

/// Two-sample KS statistic; effective size Ma Mb / (Ma + Mb).
KsResult ks_two_sample(const EmpiricalSample& a, const EmpiricalSample& b);

/// Reference law for a path functional of sigma W.
struct ReferenceCdf {
    enum class Kind { normal, brownian_sup, empirical };
    Kind kind = Kind::normal;
    double sigma = 1.0;
    const EmpiricalSample* empirical = nullptr;

    [[nodiscard]] double operator()(double x) const;
    [[nodiscard]] std::string name() const;
};

}  // namespace qlab
