#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "nleig/error.hpp"
#include "nleig/mesh.hpp"
#include "nleig/model.hpp"

namespace nleig {

struct RefinementResult {
    double value = 0.0;          ///< Richardson-extrapolated value
    std::size_t n_final = 0;     ///< interior nodes on the finest mesh used
    double residual = 0.0;       ///< solver diagnostic on the finest mesh
    std::vector<std::pair<std::size_t, double>> levels; ///< (n, raw value) per mesh
};

inline constexpr std::size_t kStartCells = 64;
inline constexpr std::size_t kMaxCells = std::size_t{1} << 18;

/// Evaluates `solve(mesh)` on nested meshes with 64, 128, ... cells,
/// extrapolating consecutive pairs under second-order convergence, until two
/// extrapolated values agree to `tol` relative.
///
/// `solve` returns {value, residual}.
template <class Solve>
RefinementResult richardson_refine(const ProblemInstance& instance, double tol, Solve&& solve)
{
    const std::size_t n_min = minimal_mesh_size(instance);
    std::size_t cells = kStartCells;
    while (cells - 1 < n_min) cells *= 2;

    RefinementResult out;
    double prev_raw = 0.0;
    double prev_ext = 0.0;
    int have = 0;
    for (; cells <= kMaxCells; cells *= 2) {
        const Mesh mesh = build_mesh(instance, cells - 1);
        const auto [raw, residual] = solve(mesh);
        out.levels.emplace_back(cells - 1, raw);
        out.n_final = cells - 1;
        out.residual = residual;
        if (have >= 1) {
            const double ext = raw + (raw - prev_raw) / 3.0;
            if (have >= 2 && std::abs(ext - prev_ext) < tol * std::abs(ext)) {
                out.value = ext;
                return out;
            }
            prev_ext = ext;
        }
        prev_raw = raw;
        ++have;
    }
    throw ResolutionError("mesh refinement did not reach relative tolerance " +
                          std::to_string(tol) + " by n = " + std::to_string(kMaxCells));
}

} // namespace nleig
