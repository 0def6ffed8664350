#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

#include "nleig/error.hpp"

namespace nleig {

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x) noexcept
    {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }

    CompensatedSum& operator+=(double x) noexcept
    {
        add(x);
        return *this;
    }

    [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;  ///< from the residual scatter, n - 2 degrees of freedom
    double r_squared = 1.0;
};

/// Weighted least squares y ~ intercept + slope x. Pass an empty weight span
/// for ordinary least squares.
inline LinearFit least_squares(std::span<const double> x, std::span<const double> y,
                               std::span<const double> w = {})
{
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n || (!w.empty() && w.size() != n)) {
        throw DomainError("least_squares: need at least two matched points");
    }
    auto weight = [&](std::size_t i) { return w.empty() ? 1.0 : w[i]; };
    CompensatedSum sw, sx, sy;
    for (std::size_t i = 0; i < n; ++i) {
        sw += weight(i);
        sx += weight(i) * x[i];
        sy += weight(i) * y[i];
    }
    const double xm = sx.value() / sw.value();
    const double ym = sy.value() / sw.value();
    CompensatedSum sxx, sxy, syy;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - xm;
        const double dy = y[i] - ym;
        sxx += weight(i) * dx * dx;
        sxy += weight(i) * dx * dy;
        syy += weight(i) * dy * dy;
    }
    if (!(sxx.value() > 0.0)) throw DomainError("least_squares: abscissae are all equal");

    LinearFit fit;
    fit.slope = sxy.value() / sxx.value();
    fit.intercept = ym - fit.slope * xm;
    CompensatedSum ssr;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - fit.intercept - fit.slope * x[i];
        ssr += weight(i) * r * r;
    }
    fit.slope_se = n > 2 ? std::sqrt(ssr.value() / static_cast<double>(n - 2) / sxx.value()) : 0.0;
    const double tss = syy.value();
    fit.r_squared = tss > 0.0 ? std::clamp(1.0 - ssr.value() / tss, 0.0, 1.0) : 1.0;
    return fit;
}

} // namespace nleig
