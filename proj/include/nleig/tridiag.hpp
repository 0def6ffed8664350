#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace nleig {

/// Tridiagonal matrix stored by diagonals; lower[0] and upper[n-1] unused.
struct Tridiagonal {
    std::vector<double> lower;
    std::vector<double> diag;
    std::vector<double> upper;

    [[nodiscard]] std::size_t size() const noexcept { return diag.size(); }

    void multiply(std::span<const double> x, std::span<double> y) const noexcept
    {
        const std::size_t n = size();
        for (std::size_t i = 0; i < n; ++i) {
            double acc = diag[i] * x[i];
            if (i > 0) acc += lower[i] * x[i - 1];
            if (i + 1 < n) acc += upper[i] * x[i + 1];
            y[i] = acc;
        }
    }
};

/// LU (Thomas) factorization of T - shift * I without pivoting.
///
/// For the symmetrizable, negative-off-diagonal matrices used here the pivot
/// signs follow Sturm's rule: all pivots are positive iff shift lies below
/// the smallest eigenvalue. factor() refuses anything else.
class TridiagonalFactor {
public:
    static std::optional<TridiagonalFactor> factor(const Tridiagonal& t, double shift)
    {
        TridiagonalFactor f;
        const std::size_t n = t.size();
        f.upper_ = t.upper;
        f.pivot_.resize(n);
        f.mult_.resize(n);
        f.mult_[0] = 0.0;
        f.pivot_[0] = t.diag[0] - shift;
        if (!(f.pivot_[0] > 0.0)) return std::nullopt;
        for (std::size_t i = 1; i < n; ++i) {
            f.mult_[i] = t.lower[i] / f.pivot_[i - 1];
            f.pivot_[i] = (t.diag[i] - shift) - f.mult_[i] * t.upper[i - 1];
            if (!(f.pivot_[i] > 0.0)) return std::nullopt;
        }
        return f;
    }

    /// Solves (T - shift I) x = rhs; rhs and x may alias.
    void solve(std::span<const double> rhs, std::span<double> x) const noexcept
    {
        const std::size_t n = pivot_.size();
        const auto& up = upper_;
        x[0] = rhs[0];
        for (std::size_t i = 1; i < n; ++i) x[i] = rhs[i] - mult_[i] * x[i - 1];
        x[n - 1] /= pivot_[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) x[i] = (x[i] - up[i] * x[i + 1]) / pivot_[i];
    }

    [[nodiscard]] std::size_t size() const noexcept { return pivot_.size(); }

private:
    TridiagonalFactor() = default;

    std::vector<double> upper_;
    std::vector<double> pivot_;
    std::vector<double> mult_;
};

} // namespace nleig
