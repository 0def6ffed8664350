#pragma once

// Graded 1-D grids on (0,1) that resolve the boundary layers of width
// gamma^(-1/(a+2)) at each endpoint (a = local exponent of V).
//
// The grid is the image of a uniform grid under a fixed map whose local
// spacing is s(x) = min(H, h_L + g x, h_R + g (1 - x)): geometric growth
// away from each end, uniform in the bulk. Because the map does not depend
// on n, doubling the cell count halves every cell, which is what Richardson
// extrapolation needs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "nleig/error.hpp"
#include "nleig/model.hpp"

namespace nleig {

struct MeshGrading {
    double min_cell = 0.0;
    double max_ratio = 1.0;    ///< largest ratio between adjacent cells
    double left_layer = 1.0;   ///< boundary-layer width targeted at x = 0
    double right_layer = 1.0;  ///< boundary-layer width targeted at x = 1
    bool graded = false;
};

struct Mesh {
    std::vector<double> nodes;      ///< interior nodes x_1 < ... < x_n
    std::vector<double> from_right; ///< 1 - x_i, computed without cancellation
    std::vector<double> widths;     ///< n + 1 cell widths, boundary cells included
    std::vector<double> weights;    ///< dual-cell quadrature weights, sum 1
    MeshGrading grading;

    [[nodiscard]] std::size_t size() const noexcept { return nodes.size(); }
    [[nodiscard]] std::size_t cells() const noexcept { return widths.size(); }

    /// Quadrature of nodal values against the uniform measure.
    template <class Range>
    [[nodiscard]] double integrate(const Range& values) const
    {
        double sum = 0.0;
        double comp = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            const double term = weights[i] * values[i] - comp;
            const double t = sum + term;
            comp = (t - sum) - term;
            sum = t;
        }
        return sum;
    }

    /// Piecewise-linear interpolation of nodal values (zero boundary values
    /// unless given).
    template <class Range>
    [[nodiscard]] double interpolate(const Range& values, double x, double left = 0.0,
                                     double right = 0.0) const
    {
        auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
        const auto k = static_cast<std::size_t>(it - nodes.begin());
        const double xl = k == 0 ? 0.0 : nodes[k - 1];
        const double xr = k == nodes.size() ? 1.0 : nodes[k];
        const double vl = k == 0 ? left : values[k - 1];
        const double vr = k == nodes.size() ? right : values[k];
        const double t = (x - xl) / (xr - xl);
        return (1.0 - t) * vl + t * vr;
    }
};

namespace detail {

inline constexpr double kMeshBulkSpacing = 1.0 / 32.0;
inline constexpr double kMeshGrowth = 0.1;     // g: adjacent-cell ratio ~ exp(g)
inline constexpr double kLayerCellDivisor = 25.0;
inline constexpr double kMaxCellRatio = 1.15;
inline constexpr double kLayerCellFraction = 1.0 / 20.0;
inline constexpr double kLayerReach = 5.0;
inline constexpr std::size_t kMinNodes = 16;

/// The spacing map x(phi), phi in [0, total], for one problem instance.
class MeshMap {
public:
    MeshMap(double h_left, double h_right, double bulk, double growth)
        : hl_(h_left), hr_(h_right), bulk_(bulk), g_(growth)
    {
        const double cross = std::clamp(0.5 * (1.0 + (hr_ - hl_) / g_), 0.0, 1.0);
        xa_ = std::min(std::max((bulk_ - hl_) / g_, 0.0), cross);
        xb_ = std::max(std::min(1.0 - (bulk_ - hr_) / g_, 1.0), cross);
        phi_a_ = std::log1p(g_ * xa_ / hl_) / g_;
        phi_b_ = phi_a_ + (xb_ - xa_) / bulk_;
        total_ = phi_b_ + std::log1p(g_ * (1.0 - xb_) / hr_) / g_;
    }

    [[nodiscard]] double total() const noexcept { return total_; }

    /// Returns (x, 1 - x) at map coordinate phi.
    [[nodiscard]] std::pair<double, double> at(double phi) const noexcept
    {
        if (phi <= phi_a_) {
            const double x = hl_ * std::expm1(g_ * phi) / g_;
            return {x, 1.0 - x};
        }
        if (phi <= phi_b_) {
            const double x = xa_ + (phi - phi_a_) * bulk_;
            return {x, 1.0 - x};
        }
        const double far = hr_ + g_ * (1.0 - xb_);
        const double d = (far * std::exp(-g_ * (phi - phi_b_)) - hr_) / g_;
        return {1.0 - d, d};
    }

private:
    double hl_, hr_, bulk_, g_;
    double xa_ = 0.0, xb_ = 1.0;
    double phi_a_ = 0.0, phi_b_ = 0.0, total_ = 0.0;
};

inline MeshMap mesh_map_for(const ProblemInstance& instance, double& left_layer,
                            double& right_layer, bool& graded)
{
    graded = instance.gamma > 1.0;
    left_layer = graded ? layer_width(instance.gamma, instance.potential.alpha()) : 1.0;
    right_layer = graded ? layer_width(instance.gamma, instance.potential.alpha_prime()) : 1.0;
    const double hl = graded ? std::min(left_layer / kLayerCellDivisor, kMeshBulkSpacing)
                             : kMeshBulkSpacing;
    const double hr = graded ? std::min(right_layer / kLayerCellDivisor, kMeshBulkSpacing)
                             : kMeshBulkSpacing;
    return MeshMap(hl, hr, kMeshBulkSpacing, kMeshGrowth);
}

inline Mesh assemble_mesh(const MeshMap& map, std::size_t n)
{
    Mesh mesh;
    mesh.nodes.resize(n);
    mesh.from_right.resize(n);
    const double step = map.total() / static_cast<double>(n + 1);
    for (std::size_t k = 0; k < n; ++k) {
        const auto [x, d] = map.at(step * static_cast<double>(k + 1));
        mesh.nodes[k] = x;
        mesh.from_right[k] = d;
    }
    mesh.widths.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        const double xl = k == 0 ? 0.0 : mesh.nodes[k - 1];
        const double xr = k == n ? 1.0 : mesh.nodes[k];
        const double dl = k == 0 ? 1.0 : mesh.from_right[k - 1];
        const double dr = k == n ? 0.0 : mesh.from_right[k];
        // take whichever coordinate is closer to its endpoint
        mesh.widths[k] = xr <= 0.5 ? xr - xl : dl - dr;
    }
    mesh.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        mesh.weights[i] = 0.5 * (mesh.widths[i] + mesh.widths[i + 1]);
    }
    mesh.weights.front() += 0.5 * mesh.widths.front();
    mesh.weights.back() += 0.5 * mesh.widths.back();
    return mesh;
}

inline void measure_grading(Mesh& mesh)
{
    auto& g = mesh.grading;
    g.min_cell = *std::min_element(mesh.widths.begin(), mesh.widths.end());
    g.max_ratio = 1.0;
    for (std::size_t k = 1; k < mesh.widths.size(); ++k) {
        const double a = mesh.widths[k - 1];
        const double b = mesh.widths[k];
        g.max_ratio = std::max(g.max_ratio, std::max(a / b, b / a));
    }
}

/// Smallest cell within kLayerReach * layer of an end must be at most
/// layer / 20, and adjacent cells may differ by at most kMaxCellRatio.
inline bool grading_ok(const Mesh& mesh)
{
    const auto& g = mesh.grading;
    if (g.max_ratio > kMaxCellRatio * (1.0 + 1e-12)) return false;
    if (!g.graded) return true;
    // cells are monotone toward each end, so the end cells are the smallest
    return mesh.widths.front() <= kLayerCellFraction * g.left_layer &&
           mesh.widths.back() <= kLayerCellFraction * g.right_layer;
}

} // namespace detail

/// Graded mesh with n interior nodes. Throws SizingError (carrying the
/// smallest feasible n) when n cannot resolve the boundary layers.
inline Mesh build_mesh(const ProblemInstance& instance, std::size_t n)
{
    instance.validate();
    double left = 1.0, right = 1.0;
    bool graded = false;
    const auto map = detail::mesh_map_for(instance, left, right, graded);

    auto make = [&](std::size_t count) {
        Mesh m = detail::assemble_mesh(map, count);
        m.grading.left_layer = left;
        m.grading.right_layer = right;
        m.grading.graded = graded;
        detail::measure_grading(m);
        return m;
    };

    if (n >= detail::kMinNodes) {
        Mesh mesh = make(n);
        if (detail::grading_ok(mesh)) return mesh;
    }

    // smallest feasible n by bisection; feasibility is monotone in n
    std::size_t lo = detail::kMinNodes;
    std::size_t hi = std::max<std::size_t>(2 * lo, static_cast<std::size_t>(map.total()) + 1);
    while (!detail::grading_ok(make(hi))) hi *= 2;
    if (detail::grading_ok(make(lo))) {
        hi = lo;
    }
    while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (detail::grading_ok(make(mid))) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    throw SizingError("build_mesh: n = " + std::to_string(n) +
                          " cannot resolve the boundary layer; minimal feasible n = " +
                          std::to_string(hi),
                      hi);
}

/// Smallest n accepted by build_mesh for this instance.
inline std::size_t minimal_mesh_size(const ProblemInstance& instance)
{
    try {
        (void)build_mesh(instance, detail::kMinNodes);
        return detail::kMinNodes;
    } catch (const SizingError& e) {
        return e.minimal_n();
    }
}

} // namespace nleig
