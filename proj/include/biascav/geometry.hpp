#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace biascav {

using Vec3 = Eigen::Vector3d;

enum class Axis { X = 0, Y = 1, Z = 2 };

[[nodiscard]] constexpr int index_of(Axis a) noexcept { return static_cast<int>(a); }
[[nodiscard]] std::string to_string(Axis a);
[[nodiscard]] Axis axis_from_string(const std::string& s);

/// Cylindrical dc electrode spanning the whole cavity along `axis`.
struct Electrode {
    Axis axis = Axis::Z;
    Vec3 anchor = Vec3::Zero();  ///< any point on the cylinder axis; the axial component is ignored
    double radius = 0.25e-3;
    double potential = 0.0;      ///< volts

    [[nodiscard]] double distance_to_axis(const Vec3& p) const;
};

/// Circular aperture in one of the six walls; `center` lies on the wall plane.
struct AccessHole {
    Vec3 center = Vec3::Zero();
    double radius = 1.5e-3;
};

/// Side port through which a tuning rod enters along the wall normal.
struct RodPort {
    Vec3 center = Vec3::Zero();
    double diameter = 2.3e-3;
};

/// Which wall a point sits on: the wall normal axis and whether it is the far (x = L) wall.
struct WallLocation {
    Axis normal;
    bool far_side;
};

/// Rectangular cavity 0 <= x <= lx, 0 <= y <= ly, 0 <= z <= lz with its inserts.
struct CavityGeometry {
    double lx = 25.6e-3;
    double ly = 7.0e-3;
    double lz = 14.0e-3;
    std::vector<Electrode> electrodes;
    std::vector<AccessHole> holes;
    RodPort rod_port;

    [[nodiscard]] Vec3 extent() const { return {lx, ly, lz}; }
    [[nodiscard]] Vec3 center() const { return extent() / 2.0; }
    [[nodiscard]] double volume() const { return lx * ly * lz; }
    [[nodiscard]] bool contains(const Vec3& p, double slack = 0.0) const;
    [[nodiscard]] std::optional<WallLocation> wall_of(const Vec3& p) const;

    /// Throws ValidationError if any documented invariant is broken.
    void validate() const;

    /// The 25.6 x 7 x 14 mm niobium cavity: two 0.5 mm electrodes along z at the
    /// TE301 nodes in the y = ly/2 plane, two 3 mm holes on the z walls, and a
    /// 2.3 mm rod port centred on the x = 0 wall.
    [[nodiscard]] static CavityGeometry reference();

    /// A bare box with no inserts.
    [[nodiscard]] static CavityGeometry box(double lx, double ly, double lz);
};

/// Mode numbers along x, y, z. Only the TE_m0l family (E along y) is modelled.
struct ModeIndex {
    int m = 1;
    int n = 0;
    int l = 1;

    [[nodiscard]] std::string label() const;
    /// Throws ValidationError unless m >= 1, n == 0, l >= 1.
    void validate() const;

    friend bool operator==(const ModeIndex&, const ModeIndex&) = default;
};

[[nodiscard]] ModeIndex parse_mode(const std::string& label);

/// Ideal-box eigenfrequency in Hz.
[[nodiscard]] double resonance_frequency(const CavityGeometry& geometry, ModeIndex mode);

/// Field amplitudes at a point. `e` is peak-normalized (max |E| = 1); `b` is c*B on the
/// same scale so that |e|^2 and |b|^2 are directly comparable energy densities.
struct ModeSample {
    Vec3 e = Vec3::Zero();
    Vec3 b = Vec3::Zero();
};

/// Analytic TE_m0l field of the ideal box (inserts ignored).
class ModeField {
public:
    ModeField(const CavityGeometry& geometry, ModeIndex mode);

    /// Throws ValidationError for points outside the box.
    [[nodiscard]] ModeSample at(const Vec3& p) const;
    [[nodiscard]] ModeSample at_unchecked(const Vec3& p) const noexcept;

    [[nodiscard]] ModeIndex mode() const noexcept { return mode_; }
    [[nodiscard]] double frequency() const noexcept { return frequency_; }
    [[nodiscard]] double wavenumber() const noexcept { return k_; }
    [[nodiscard]] const Vec3& extent() const noexcept { return extent_; }

private:
    Vec3 extent_;
    ModeIndex mode_;
    double kx_;
    double kz_;
    double k_;
    double frequency_;
};

/// Interior planes x = const where the mode's electric field vanishes.
[[nodiscard]] std::vector<double> node_planes(ModeIndex mode, const CavityGeometry& geometry);

/// G = omega mu0 Int|H|^2 dV / Oint|H_t|^2 dS over the ideal box, so that Q = G / R_s.
/// Midpoint quadrature with `samples` points per axis that the field varies along.
[[nodiscard]] double geometry_factor(const CavityGeometry& geometry, ModeIndex mode,
                                     int samples = 256);

}  // namespace biascav
