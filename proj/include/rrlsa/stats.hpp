#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "rrlsa/linalg.hpp"

namespace rrlsa {

struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

/// Delete-one jackknife for a smooth function of a sample mean.
inline Estimate jackknife_of_mean(std::span<const double> xs, const std::function<double(double)>& g) {
    const auto n = xs.size();
    double total = 0.0;
    for (double x : xs) {
        total += x;
    }
    const double full = g(total / static_cast<double>(n));
    if (n < 2) {
        return {full, 0.0};
    }
    std::vector<double> loo(n);
    double loo_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        loo[i] = g((total - xs[i]) / static_cast<double>(n - 1));
        loo_mean += loo[i];
    }
    loo_mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : loo) {
        ss += (v - loo_mean) * (v - loo_mean);
    }
    const double nn = static_cast<double>(n);
    return {full, std::sqrt((nn - 1.0) / nn * ss)};
}

/// Sample mean with its jackknife standard error (which, for the mean,
/// coincides with sd / sqrt(n)).
inline Estimate mean_estimate(std::span<const double> xs) {
    return jackknife_of_mean(xs, [](double m) { return m; });
}

/// Componentwise mean and standard error of a set of vectors.
struct VectorEstimate {
    Vector mean;
    Vector se;
};

inline VectorEstimate mean_estimate(const std::vector<Vector>& xs) {
    const Eigen::Index d = xs.empty() ? 0 : xs.front().size();
    VectorEstimate out{Vector::Zero(d), Vector::Zero(d)};
    std::vector<double> column(xs.size());
    for (Eigen::Index i = 0; i < d; ++i) {
        for (std::size_t t = 0; t < xs.size(); ++t) {
            column[t] = xs[t](i);
        }
        const Estimate e = mean_estimate(column);
        out.mean(i) = e.value;
        out.se(i) = e.se;
    }
    return out;
}

/// Ordinary least squares slope of y on x with a 95% normal half-width.
struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double half_width = 0.0;
};

inline SlopeFit ols_slope(std::span<const double> x, std::span<const double> y) {
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (x.size() > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - fit.intercept - fit.slope * x[i];
            rss += r * r;
        }
        fit.half_width = 1.96 * std::sqrt(rss / (n - 2.0) / sxx);
    }
    return fit;
}

}  // namespace rrlsa
