#pragma once

#include <chrono>
#include <cstddef>
#include <span>
#include <utility>

namespace soiltn {

struct ErrorStats {
    double mean = 0.0;  // mean absolute (or signed) error, ppm
    double std = 0.0;   // population standard deviation, ppm
    std::size_t n = 0;
};

// sqrt(mean((y - yhat)^2))
double rmse(std::span<const double> y, std::span<const double> yhat);

// 100 * sqrt(mean(((y - yhat) / y)^2)); every y must be nonzero.
double rmspe(std::span<const double> y, std::span<const double> yhat);

// mu/sigma of |y - yhat| (population sigma).
ErrorStats abs_error_stats(std::span<const double> y, std::span<const double> yhat);

// mu/sigma of the signed residuals y - yhat.
ErrorStats signed_error_stats(std::span<const double> y, std::span<const double> yhat);

// Runs `block` and returns its result together with wall-clock seconds
// measured on a monotonic clock.
template <typename F>
auto timed(F&& block) -> std::pair<decltype(block()), double> {
    const auto t0 = std::chrono::steady_clock::now();
    auto result = block();
    const auto t1 = std::chrono::steady_clock::now();
    return {std::move(result), std::chrono::duration<double>(t1 - t0).count()};
}

}  // namespace soiltn
