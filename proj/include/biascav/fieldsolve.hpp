#pragma once

#include <array>
#include <vector>

#include "biascav/field_map.hpp"
#include "biascav/geometry.hpp"

namespace biascav {

/// Finite-difference grid over the cavity box. `cells` counts intervals per axis, so the
/// grid has cells + 1 nodes per axis with the walls on the outermost nodes.
struct GridSpec {
    std::array<int, 3> cells{64, 32, 48};
    double tolerance = 1e-6;   ///< relative max-norm residual
    long max_iterations = 200000;
    double relaxation = 0.0;   ///< SOR factor in (0, 2); 0 derives it from the grid

    void validate() const;

    [[nodiscard]] static GridSpec electrostatic_default() { return GridSpec{}; }
    [[nodiscard]] static GridSpec magnetostatic_default() {
        GridSpec g;
        g.cells = {96, 48, 72};
        return g;
    }
};

/// Solved potential plus the field derived from it.
struct FieldSolution {
    FieldMap field;
    std::vector<double> potential;  ///< V (electric) or T*m (magnetic scalar potential)
    std::vector<char> fixed;        ///< 1 where the node carries a Dirichlet value
    long iterations = 0;
    double residual = 0.0;
};

/// Walls grounded, electrode 1 at `v1` and electrode 2 at `v2`; E = -grad(phi).
[[nodiscard]] FieldSolution solve_electrostatic(const CavityGeometry& geometry,
                                                const GridSpec& grid, double v1, double v2);

/// Same, with every electrode held at its own `potential`.
[[nodiscard]] FieldSolution solve_electrostatic(const CavityGeometry& geometry,
                                                const GridSpec& grid);

/// Perfectly diamagnetic walls (zero normal B) with the access holes acting as flux ports
/// that carry the exterior uniform-field scalar potential. `b_ext` in tesla, `direction`
/// must be parallel to the hole axis.
[[nodiscard]] FieldSolution solve_magnetostatic(const CavityGeometry& geometry,
                                                const GridSpec& grid, double b_ext,
                                                const Vec3& direction);

/// Axis-aligned box in metres.
struct Region {
    Vec3 lower = Vec3::Zero();
    Vec3 upper = Vec3::Zero();

    [[nodiscard]] static Region centered(const Vec3& center, const Vec3& size) {
        return Region{center - size / 2.0, center + size / 2.0};
    }
};

/// Isotropic Gaussian atom cloud. `diameter` is the 1/e^2 diameter (4 sigma); `offset`
/// is measured from the centre of the field map.
struct Cloud {
    Vec3 offset = Vec3::Zero();
    double diameter = 1.1e-3;

    [[nodiscard]] double sigma() const noexcept { return diameter / 4.0; }
    /// Half-width of the box the cloud is truncated to.
    [[nodiscard]] double support() const noexcept { return 4.0 * sigma(); }
};

struct FieldStats {
    double center_value = 0.0;
    double mean_abs_deviation = 0.0;  ///< mean of |F/F_c - 1| over the region's nodes
    double max_abs_deviation = 0.0;
    std::size_t region_nodes = 0;
    std::vector<double> relative_deviation;  ///< |F|/F_c - 1 at every node of the map
    double cloud_mean = 0.0;
    double cloud_std = 0.0;
};

struct CloudMoments {
    double mean = 0.0;
    double std = 0.0;
};

/// Gaussian-weighted mean and standard deviation of |F| over the cloud.
[[nodiscard]] CloudMoments cloud_moments(const FieldMap& map, const Cloud& cloud,
                                         int points_per_axis = 33);

[[nodiscard]] FieldStats field_statistics(const FieldMap& map, const Region& region,
                                          const Cloud& cloud);

/// Outward flux of -grad(potential) through the faces of the node box [lo, hi], using
/// the same staggered differences as the solver. Returns {net, gross} where gross is
/// the sum of absolute face fluxes.
struct FluxBalance {
    double net = 0.0;
    double gross = 0.0;
};
[[nodiscard]] FluxBalance flux_balance(const FieldSolution& solution,
                                       const std::array<int, 3>& lo,
                                       const std::array<int, 3>& hi);

}  // namespace biascav
