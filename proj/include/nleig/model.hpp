#pragma once

// Potential family, problem configuration and the boundary-layer scaling
// functions shared by every solver.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "nleig/error.hpp"

namespace nleig {

/// Jump-rate profile V on [0,1].
///
/// The default family is amplitude * x^alpha * (1-x)^alpha_prime. A tabulated
/// profile is piecewise linear between nodes; its boundary exponents are
/// declared by the caller and only steer meshing and scaling.
class PotentialSpec {
public:
    enum class Form { power_law, tabulated };

    static PotentialSpec power_law(double alpha, double alpha_prime, double amplitude = 1.0)
    {
        PotentialSpec s;
        s.alpha_ = alpha;
        s.alpha_prime_ = alpha_prime;
        s.amplitude_ = amplitude;
        s.form_ = Form::power_law;
        s.validate();
        return s;
    }

    /// Nodes must start at 0, end at 1 and be strictly increasing. Values
    /// must be nonnegative; use satisfies_envelope() to check the stronger
    /// positivity/envelope assumptions needed by the asymptotic theory.
    static PotentialSpec tabulated(std::vector<double> nodes, std::vector<double> values,
                                   double alpha, double alpha_prime)
    {
        PotentialSpec s;
        s.alpha_ = alpha;
        s.alpha_prime_ = alpha_prime;
        s.amplitude_ = 1.0;
        s.form_ = Form::tabulated;
        s.nodes_ = std::move(nodes);
        s.values_ = std::move(values);
        s.validate();
        return s;
    }

    [[nodiscard]] double alpha() const noexcept { return alpha_; }
    [[nodiscard]] double alpha_prime() const noexcept { return alpha_prime_; }
    [[nodiscard]] double amplitude() const noexcept { return amplitude_; }
    [[nodiscard]] Form form() const noexcept { return form_; }
    [[nodiscard]] const std::vector<double>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }

    /// V(x) without range checks; x must lie in [0,1].
    [[nodiscard]] double operator()(double x) const noexcept
    {
        if (form_ == Form::power_law) {
            return amplitude_ * power(x, alpha_) * power(1.0 - x, alpha_prime_);
        }
        auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
        if (it == nodes_.begin()) return values_.front();
        if (it == nodes_.end()) return values_.back();
        const auto k = static_cast<std::size_t>(it - nodes_.begin());
        const double t = (x - nodes_[k - 1]) / (nodes_[k] - nodes_[k - 1]);
        return (1.0 - t) * values_[k - 1] + t * values_[k];
    }

    /// V at x when 1 - x is known more precisely than by subtraction.
    [[nodiscard]] double operator()(double x, double one_minus_x) const noexcept
    {
        if (form_ == Form::power_law) {
            return amplitude_ * power(x, alpha_) * power(one_minus_x, alpha_prime_);
        }
        return (*this)(x);
    }

    [[nodiscard]] double max_value() const noexcept
    {
        if (form_ == Form::tabulated) {
            return *std::max_element(values_.begin(), values_.end());
        }
        if (alpha_ == 0.0 || alpha_prime_ == 0.0) {
            // monotone (or constant) on [0,1]; maximum at an endpoint
            return std::max((*this)(0.0), (*this)(1.0));
        }
        const double xm = alpha_ / (alpha_ + alpha_prime_);
        return (*this)(xm);
    }

    [[nodiscard]] bool symmetric() const noexcept
    {
        if (form_ == Form::power_law) return alpha_ == alpha_prime_;
        const std::size_t n = nodes_.size();
        for (std::size_t i = 0; i < n; ++i) {
            if (std::abs(nodes_[i] + nodes_[n - 1 - i] - 1.0) > 1e-14) return false;
            if (values_[i] != values_[n - 1 - i]) return false;
        }
        return true;
    }

    /// Positive on the interior and V(x)/x^alpha, V(1-x)/x^alpha_prime within
    /// [lo, hi] on (0, 0.1]. Always true for the power-law family.
    [[nodiscard]] bool satisfies_envelope(double lo = 1e-3, double hi = 1e3) const
    {
        if (form_ == Form::power_law) return true;
        for (std::size_t i = 1; i + 1 < nodes_.size(); ++i) {
            if (!(values_[i] > 0.0)) return false;
        }
        for (int k = 1; k <= 1000; ++k) {
            const double x = 0.1 * k / 1000.0;
            const double left = (*this)(x) / std::pow(x, alpha_);
            const double right = (*this)(1.0 - x) / std::pow(x, alpha_prime_);
            if (!(left >= lo && left <= hi && right >= lo && right <= hi)) return false;
        }
        return true;
    }

    void validate() const
    {
        if (!(alpha_ >= 0.0) || !std::isfinite(alpha_)) {
            throw DomainError("potential: alpha must be finite and >= 0");
        }
        if (!(alpha_prime_ >= 0.0) || alpha_prime_ > alpha_) {
            throw DomainError("potential: need 0 <= alpha_prime <= alpha");
        }
        if (!(amplitude_ > 0.0) || !std::isfinite(amplitude_)) {
            throw DomainError("potential: amplitude must be finite and > 0");
        }
        if (form_ == Form::tabulated) {
            if (nodes_.size() < 2 || nodes_.size() != values_.size()) {
                throw DomainError("potential: table needs >= 2 nodes and matching values");
            }
            if (nodes_.front() != 0.0 || nodes_.back() != 1.0) {
                throw DomainError("potential: table nodes must span [0,1]");
            }
            for (std::size_t i = 1; i < nodes_.size(); ++i) {
                if (!(nodes_[i] > nodes_[i - 1])) {
                    throw DomainError("potential: table nodes must be strictly increasing");
                }
            }
            for (double v : values_) {
                if (!(v >= 0.0) || !std::isfinite(v)) {
                    throw DomainError("potential: table values must be finite and >= 0");
                }
            }
        }
    }

private:
    static double power(double x, double p) noexcept
    {
        if (p == 0.0) return 1.0;
        if (p == 1.0) return x;
        if (p == 2.0) return x * x;
        return std::pow(x, p);
    }

    double alpha_ = 0.0;
    double alpha_prime_ = 0.0;
    double amplitude_ = 1.0;
    Form form_ = Form::power_law;
    std::vector<double> nodes_;
    std::vector<double> values_;
};

/// V(x) with a domain check.
inline double eval_potential(const PotentialSpec& spec, double x)
{
    if (!(x >= 0.0 && x <= 1.0)) {
        throw DomainError("eval_potential: x outside [0,1]");
    }
    return spec(x);
}

/// Brownian motion on (0,1), redistributed uniformly at rate gamma * V.
struct ProblemInstance {
    PotentialSpec potential;
    double gamma = 0.0;

    void validate() const
    {
        potential.validate();
        if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
            throw DomainError("problem: gamma must be finite and >= 0");
        }
    }
};

/// Scaling exponent of lambda0 in gamma: (min(alpha,1) + 1) / (alpha + 2).
inline double delta_exponent(double alpha)
{
    if (!(alpha >= 0.0)) throw DomainError("delta_exponent: alpha must be >= 0");
    return (std::min(alpha, 1.0) + 1.0) / (alpha + 2.0);
}

/// Boundary-layer width gamma^(-1/(alpha+2)).
inline double layer_width(double gamma, double alpha)
{
    return std::pow(gamma, -1.0 / (alpha + 2.0));
}

struct ScalingEval {
    double r = 0.0;      ///< boundary-layer width
    double h = 0.0;      ///< gamma * h equals the predicted order of lambda0
    double lambda = 0.0; ///< theta * gamma * h
    double theta = 0.0;
    double v_theta = 1.0; ///< 1 + max(-theta, 0)
    double delta = 0.0;
};

inline ScalingEval scaling(double theta, double gamma, double alpha)
{
    if (!(gamma > 1.0) || !std::isfinite(gamma)) {
        throw DomainError("scaling: gamma must be > 1");
    }
    if (!(alpha >= 0.0)) throw DomainError("scaling: alpha must be >= 0");
    ScalingEval s;
    s.theta = theta;
    s.r = layer_width(gamma, alpha);
    if (alpha < 1.0) {
        s.h = s.r;
    } else if (alpha == 1.0) {
        s.h = s.r / std::log(gamma);
    } else {
        s.h = std::pow(s.r, alpha);
    }
    s.lambda = theta * gamma * s.h;
    s.v_theta = 1.0 + std::max(-theta, 0.0);
    s.delta = delta_exponent(alpha);
    return s;
}

/// Closed form of the integral of x^(-alpha) over [lo, hi], 0 < lo <= hi.
inline double inverse_power_integral(double alpha, double lo, double hi)
{
    if (!(lo > 0.0) || hi < lo) throw DomainError("inverse_power_integral: need 0 < lo <= hi");
    if (alpha == 1.0) return std::log(hi / lo);
    return (std::pow(hi, 1.0 - alpha) - std::pow(lo, 1.0 - alpha)) / (1.0 - alpha);
}

} // namespace nleig
