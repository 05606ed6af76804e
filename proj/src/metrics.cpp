#include "soiltn/metrics.hpp"

#include <cmath>

#include "soiltn/errors.hpp"

namespace soiltn {

namespace {

void check_lengths(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size()) {
        throw ValidationError("metric input length mismatch: " +
                              std::to_string(y.size()) + " vs " +
                              std::to_string(yhat.size()));
    }
    if (y.empty()) throw ValidationError("metric input is empty");
}

}  // namespace

double rmse(std::span<const double> y, std::span<const double> yhat) {
    check_lengths(y, yhat);
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = y[i] - yhat[i];
        acc += e * e;
    }
    return std::sqrt(acc / static_cast<double>(y.size()));
}

double rmspe(std::span<const double> y, std::span<const double> yhat) {
    check_lengths(y, yhat);
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == 0.0) {
            throw ValidationError("rmspe undefined: zero target at position " +
                                  std::to_string(i));
        }
        const double r = (y[i] - yhat[i]) / y[i];
        acc += r * r;
    }
    return 100.0 * std::sqrt(acc / static_cast<double>(y.size()));
}

namespace {

ErrorStats error_stats_impl(std::span<const double> y, std::span<const double> yhat,
                            bool absolute) {
    check_lengths(y, yhat);
    const std::size_t n = y.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - yhat[i];
        sum += absolute ? std::fabs(e) : e;
    }
    const double mu = sum / static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - yhat[i];
        const double v = (absolute ? std::fabs(e) : e) - mu;
        var += v * v;
    }
    var /= static_cast<double>(n);
    return {mu, std::sqrt(var), n};
}

}  // namespace

ErrorStats abs_error_stats(std::span<const double> y, std::span<const double> yhat) {
    return error_stats_impl(y, yhat, true);
}

ErrorStats signed_error_stats(std::span<const double> y, std::span<const double> yhat) {
    return error_stats_impl(y, yhat, false);
}

}  // namespace soiltn
