#include "biascav/tuning.hpp"

#include <cmath>

#include "biascav/constants.hpp"
#include "biascav/csv.hpp"
#include "biascav/error.hpp"

namespace biascav {

void RodInsertion::validate(const CavityGeometry& geometry) const {
    if (!(diameter > 0.0)) throw ValidationError("rod diameter must be positive");
    if (!(diameter < geometry.rod_port.diameter)) {
        throw ValidationError("rod diameter must be smaller than the port diameter");
    }
    if (!(depth >= 0.0 && depth <= geometry.lx)) {
        throw ValidationError("insertion depth must lie in [0, lx]");
    }
    if (material == RodMaterial::Dielectric && !(permittivity >= 1.0)) {
        throw ValidationError("relative permittivity must be at least 1");
    }
}

namespace {

// Integral of |E|^2 + |cB|^2 over the empty box. Fields do not vary along y.
double stored_energy(const ModeField& field, const Vec3& ext) {
    constexpr int n = 256;
    const double hx = ext.x() / n;
    const double hz = ext.z() / n;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
            const auto s = field.at_unchecked(Vec3((i + 0.5) * hx, 0.0, (k + 0.5) * hz));
            sum += s.e.squaredNorm() + s.b.squaredNorm();
        }
    }
    return sum * hx * hz * ext.y();
}

}  // namespace

TuningShift perturbation_shift(const CavityGeometry& geometry, ModeIndex mode,
                               const RodInsertion& rod, const TuningOptions& options) {
    geometry.validate();
    rod.validate(geometry);
    if (options.axial_samples < 4 || options.radial_samples < 2 || options.angular_samples < 4) {
        throw ValidationError("rod quadrature is too coarse");
    }
    const ModeField field(geometry, mode);
    const double nu = field.frequency();

    TuningShift out;
    out.depth = rod.depth;
    if (rod.depth == 0.0) return out;
    if (rod.material == RodMaterial::Dielectric && rod.permittivity == 1.0) return out;

    // Midpoint rule in (x, r, theta) over the inserted cylinder.
    const double radius = rod.diameter / 2.0;
    const double dx = rod.depth / options.axial_samples;
    const double dr = radius / options.radial_samples;
    const double dth = 2.0 * constants::pi / options.angular_samples;
    const Vec3 axis_point = geometry.rod_port.center;
    double e2 = 0.0;
    double b2 = 0.0;
    for (int i = 0; i < options.axial_samples; ++i) {
        const double x = (i + 0.5) * dx;
        for (int r = 0; r < options.radial_samples; ++r) {
            const double rho = (r + 0.5) * dr;
            const double w = rho * dr * dth * dx;
            for (int t = 0; t < options.angular_samples; ++t) {
                const double th = (t + 0.5) * dth;
                const Vec3 p(x, axis_point.y() + rho * std::cos(th),
                             axis_point.z() + rho * std::sin(th));
                const auto s = field.at(p);
                e2 += w * s.e.squaredNorm();
                b2 += w * s.b.squaredNorm();
            }
        }
    }

    const double energy = stored_energy(field, geometry.extent());
    if (rod.material == RodMaterial::Dielectric) {
        const double chi = rod.permittivity - 1.0;
        const double local = options.local_field == LocalField::QuasiStatic
                                 ? 2.0 / (rod.permittivity + 1.0)
                                 : 1.0;
        out.relative = -chi * local * e2 / energy;
    } else {
        out.relative = (b2 - e2) / energy;
    }
    out.shift = out.relative * nu;
    out.nonperturbative = std::abs(out.relative) > 0.05;
    return out;
}

std::vector<TuningShift> tuning_curve(const CavityGeometry& geometry, ModeIndex mode,
                                      RodInsertion rod, const std::vector<double>& depths,
                                      const TuningOptions& options) {
    std::vector<TuningShift> curve;
    curve.reserve(depths.size());
    for (double d : depths) {
        rod.depth = d;
        curve.push_back(perturbation_shift(geometry, mode, rod, options));
    }
    return curve;
}

void write_tuning_csv(const std::filesystem::path& path, const std::vector<TuningShift>& curve) {
    CsvTable t;
    t.comments.push_back("rod tuning curve; depth in m, shift in Hz");
    t.header = {"depth_m", "shift_Hz", "nonperturbative"};
    for (const auto& s : curve) t.rows.push_back({s.depth, s.shift, s.nonperturbative ? 1.0 : 0.0});
    write_csv(path, t);
}

}  // namespace biascav
