#include "biascav/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "biascav/constants.hpp"
#include "biascav/error.hpp"

namespace biascav {

namespace {

constexpr double kWallTolerance = 1e-12;

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

// The two axes perpendicular to `a`, in cyclic order.
std::pair<int, int> transverse_axes(Axis a) {
    const int i = index_of(a);
    return {(i + 1) % 3, (i + 2) % 3};
}

}  // namespace

std::string to_string(Axis a) {
    switch (a) {
        case Axis::X: return "x";
        case Axis::Y: return "y";
        case Axis::Z: return "z";
    }
    return "?";
}

Axis axis_from_string(const std::string& s) {
    if (s == "x" || s == "X") return Axis::X;
    if (s == "y" || s == "Y") return Axis::Y;
    if (s == "z" || s == "Z") return Axis::Z;
    throw ValidationError("unknown axis '" + s + "' (expected x, y or z)");
}

double Electrode::distance_to_axis(const Vec3& p) const {
    Vec3 d = p - anchor;
    d[index_of(axis)] = 0.0;
    return d.norm();
}

bool CavityGeometry::contains(const Vec3& p, double slack) const {
    const Vec3 ext = extent();
    for (int a = 0; a < 3; ++a) {
        const double tol = slack + kWallTolerance * ext[a];
        if (!(p[a] >= -tol && p[a] <= ext[a] + tol)) return false;
    }
    return true;
}

std::optional<WallLocation> CavityGeometry::wall_of(const Vec3& p) const {
    const Vec3 ext = extent();
    for (int a = 0; a < 3; ++a) {
        const double tol = kWallTolerance * ext[a] + 1e-15;
        if (std::abs(p[a]) <= tol) return WallLocation{static_cast<Axis>(a), false};
        if (std::abs(p[a] - ext[a]) <= tol) return WallLocation{static_cast<Axis>(a), true};
    }
    return std::nullopt;
}

void CavityGeometry::validate() const {
    if (!finite_positive(lx) || !finite_positive(ly) || !finite_positive(lz)) {
        throw ValidationError("cavity dimensions must be positive and finite");
    }
    const Vec3 ext = extent();

    for (std::size_t i = 0; i < electrodes.size(); ++i) {
        const auto& e = electrodes[i];
        const std::string tag = "electrode " + std::to_string(i + 1);
        if (!finite_positive(e.radius)) throw ValidationError(tag + ": radius must be positive");
        if (!std::isfinite(e.potential)) throw ValidationError(tag + ": potential must be finite");
        const auto [u, v] = transverse_axes(e.axis);
        const double limit = std::min(ext[u], ext[v]) / 10.0;
        if (e.radius >= limit) {
            std::ostringstream os;
            os << tag << ": radius " << e.radius << " m must be below " << limit
               << " m (a tenth of the smaller transverse dimension)";
            throw ValidationError(os.str());
        }
        for (int a : {u, v}) {
            if (e.anchor[a] - e.radius <= 0.0 || e.anchor[a] + e.radius >= ext[a]) {
                throw ValidationError(tag + ": cylinder must lie strictly inside the cavity");
            }
        }
    }

    for (std::size_t i = 0; i < holes.size(); ++i) {
        const auto& h = holes[i];
        const std::string tag = "access hole " + std::to_string(i + 1);
        if (!std::isfinite(h.radius) || h.radius < 0.0) {
            throw ValidationError(tag + ": radius must be non-negative");
        }
        const auto wall = wall_of(h.center);
        if (!wall) throw ValidationError(tag + ": centre must lie on a cavity wall");
        const auto [u, v] = transverse_axes(wall->normal);
        for (int a : {u, v}) {
            if (h.center[a] - h.radius <= 0.0 || h.center[a] + h.radius >= ext[a]) {
                throw ValidationError(tag + ": aperture must lie strictly inside its wall face");
            }
        }
        for (std::size_t j = 0; j < electrodes.size(); ++j) {
            const auto& e = electrodes[j];
            if (e.distance_to_axis(h.center) <= h.radius + e.radius) {
                throw ValidationError(tag + " overlaps electrode " + std::to_string(j + 1));
            }
        }
    }

    if (!finite_positive(rod_port.diameter)) {
        throw ValidationError("rod port diameter must be positive");
    }
    const auto port_wall = wall_of(rod_port.center);
    if (!port_wall) throw ValidationError("rod port centre must lie on a cavity wall");
    const auto [u, v] = transverse_axes(port_wall->normal);
    for (int a : {u, v}) {
        const double r = rod_port.diameter / 2.0;
        if (rod_port.center[a] - r <= 0.0 || rod_port.center[a] + r >= ext[a]) {
            throw ValidationError("rod port must lie strictly inside its wall face");
        }
    }
}

CavityGeometry CavityGeometry::reference() {
    CavityGeometry g;
    g.lx = 25.6e-3;
    g.ly = 7.0e-3;
    g.lz = 14.0e-3;
    g.electrodes = {
        Electrode{Axis::Z, Vec3(g.lx / 3.0, g.ly / 2.0, 0.0), 0.25e-3, 0.0},
        Electrode{Axis::Z, Vec3(2.0 * g.lx / 3.0, g.ly / 2.0, 0.0), 0.25e-3, 0.0},
    };
    g.holes = {
        AccessHole{Vec3(g.lx / 2.0, g.ly / 2.0, 0.0), 1.5e-3},
        AccessHole{Vec3(g.lx / 2.0, g.ly / 2.0, g.lz), 1.5e-3},
    };
    g.rod_port = RodPort{Vec3(0.0, g.ly / 2.0, g.lz / 2.0), 2.3e-3};
    return g;
}

CavityGeometry CavityGeometry::box(double lx, double ly, double lz) {
    CavityGeometry g;
    g.lx = lx;
    g.ly = ly;
    g.lz = lz;
    g.rod_port = RodPort{Vec3(0.0, ly / 2.0, lz / 2.0), std::min(ly, lz) / 4.0};
    return g;
}

std::string ModeIndex::label() const {
    return "TE" + std::to_string(m) + std::to_string(n) + std::to_string(l);
}

void ModeIndex::validate() const {
    if (m == 0 && n == 0 && l == 0) throw ValidationError("mode index (0,0,0) is not a mode");
    if (m < 0 || n < 0 || l < 0) throw ValidationError("mode numbers must be non-negative");
    if (n != 0 || m < 1 || l < 1) {
        throw UnsupportedError("mode " + label() +
                               " is outside the TE_m0l family (need m >= 1, n = 0, l >= 1)");
    }
}

ModeIndex parse_mode(const std::string& label) {
    std::string digits = label;
    if (digits.rfind("TE", 0) == 0 || digits.rfind("te", 0) == 0) digits = digits.substr(2);
    if (digits.size() != 3 ||
        !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        throw ValidationError("cannot parse mode label '" + label + "' (expected e.g. TE301)");
    }
    ModeIndex mode{digits[0] - '0', digits[1] - '0', digits[2] - '0'};
    mode.validate();
    return mode;
}

double resonance_frequency(const CavityGeometry& geometry, ModeIndex mode) {
    mode.validate();
    if (!finite_positive(geometry.lx) || !finite_positive(geometry.ly) ||
        !finite_positive(geometry.lz)) {
        throw ValidationError("cavity dimensions must be positive and finite");
    }
    const double a = mode.m / geometry.lx;
    const double b = mode.n / geometry.ly;
    const double c = mode.l / geometry.lz;
    return 0.5 * constants::speed_of_light * std::sqrt(a * a + b * b + c * c);
}

ModeField::ModeField(const CavityGeometry& geometry, ModeIndex mode)
    : extent_(geometry.extent()), mode_(mode) {
    frequency_ = resonance_frequency(geometry, mode);
    kx_ = mode.m * constants::pi / geometry.lx;
    kz_ = mode.l * constants::pi / geometry.lz;
    k_ = std::hypot(kx_, kz_);
}

ModeSample ModeField::at_unchecked(const Vec3& p) const noexcept {
    const double sx = std::sin(kx_ * p.x());
    const double cx = std::cos(kx_ * p.x());
    const double sz = std::sin(kz_ * p.z());
    const double cz = std::cos(kz_ * p.z());
    ModeSample s;
    s.e = Vec3(0.0, sx * sz, 0.0);
    // Faraday's law for E_y = sin(kx x) sin(kz z); B lags E by 90 degrees.
    s.b = Vec3(kz_ / k_ * sx * cz, 0.0, -kx_ / k_ * cx * sz);
    return s;
}

ModeSample ModeField::at(const Vec3& p) const {
    for (int a = 0; a < 3; ++a) {
        const double tol = kWallTolerance * extent_[a];
        if (!(p[a] >= -tol && p[a] <= extent_[a] + tol)) {
            std::ostringstream os;
            os << "point (" << p.x() << ", " << p.y() << ", " << p.z()
               << ") m lies outside the cavity";
            throw ValidationError(os.str());
        }
    }
    return at_unchecked(p);
}

std::vector<double> node_planes(ModeIndex mode, const CavityGeometry& geometry) {
    mode.validate();
    std::vector<double> planes;
    planes.reserve(static_cast<std::size_t>(mode.m - 1));
    for (int k = 1; k < mode.m; ++k) planes.push_back(k * geometry.lx / mode.m);
    return planes;
}

double geometry_factor(const CavityGeometry& geometry, ModeIndex mode, int samples) {
    if (samples < 8) throw ValidationError("geometry_factor needs at least 8 samples per axis");
    const ModeField field(geometry, mode);
    const Vec3 ext = geometry.extent();
    // TE_m0l fields do not depend on y, so one midpoint sample is exact along y.
    const std::array<int, 3> counts{samples, mode.n == 0 ? 1 : samples, samples};

    double volume_integral = 0.0;
    {
        const Vec3 h(ext.x() / counts[0], ext.y() / counts[1], ext.z() / counts[2]);
        for (int i = 0; i < counts[0]; ++i) {
            for (int j = 0; j < counts[1]; ++j) {
                for (int k = 0; k < counts[2]; ++k) {
                    const Vec3 p((i + 0.5) * h.x(), (j + 0.5) * h.y(), (k + 0.5) * h.z());
                    volume_integral += field.at_unchecked(p).b.squaredNorm();
                }
            }
        }
        volume_integral *= h.prod();
    }

    double surface_integral = 0.0;
    for (int normal = 0; normal < 3; ++normal) {
        const int u = (normal + 1) % 3;
        const int v = (normal + 2) % 3;
        const double hu = ext[u] / counts[u];
        const double hv = ext[v] / counts[v];
        for (double wall : {0.0, ext[normal]}) {
            double face = 0.0;
            for (int i = 0; i < counts[u]; ++i) {
                for (int j = 0; j < counts[v]; ++j) {
                    Vec3 p;
                    p[normal] = wall;
                    p[u] = (i + 0.5) * hu;
                    p[v] = (j + 0.5) * hv;
                    const Vec3 b = field.at_unchecked(p).b;
                    face += b.squaredNorm() - b[normal] * b[normal];
                }
            }
            surface_integral += face * hu * hv;
        }
    }

    return field.wavenumber() * constants::free_space_impedance * volume_integral /
           surface_integral;
}

}  // namespace biascav
