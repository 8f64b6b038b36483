// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace qlab {

/// Kahan-Babuska (Neumaier) compensated accumulator.
class CompensatedSum {
  public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            carry_ += (sum_ - t) + x;
        } else {
            carry_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    [[nodiscard]] double value() const { return sum_ + carry_; }

  private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

inline double compensated_sum(std::span<const double> values) {
    CompensatedSum acc;
    for (double v : values) acc.add(v);
    return acc.value();
}

struct MeanEstimate {
    double mean = 0.0;
    double standard_error = 0.0;
    double variance = 0.0;  // unbiased sample variance
};

/// Sample mean, unbiased variance and standard error of the mean.
inline MeanEstimate mean_estimate(std::span<const double> values) {
    MeanEstimate out;
    if (values.empty()) return out;
    const double m = static_cast<double>(values.size());
    out.mean = compensated_sum(values) / m;
    if (values.size() > 1) {
        CompensatedSum sq;
        for (double v : values) sq.add((v - out.mean) * (v - out.mean));
        out.variance = sq.value() / (m - 1.0);
        out.standard_error = std::sqrt(out.variance / m);
    }
    return out;
}

/// Resolves 0 to the hardware concurrency.
inline unsigned resolve_workers(unsigned workers) {
    if (workers != 0) return workers;
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, count) on `workers` threads with a static block
/// partition. Results must be written to per-index slots; any reduction
/// happens afterwards in index order so the output does not depend on the
/// worker count.
template <class Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn) {
    workers = resolve_workers(workers);
    if (workers <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const std::size_t used = std::min<std::size_t>(workers, count);
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> threads;
        threads.reserve(used);
        for (std::size_t w = 0; w < used; ++w) {
            const std::size_t begin = count * w / used;
            const std::size_t end = count * (w + 1) / used;
            threads.emplace_back([begin, end, &fn, &failure, &failure_mutex] {
                try {
                    for (std::size_t i = begin; i < end; ++i) fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace qlab
