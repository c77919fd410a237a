#include "biascav/lossmodel.hpp"

#include <cmath>

#include "biascav/constants.hpp"
#include "biascav/error.hpp"

namespace biascav {

namespace {

// TE301 calibration: linewidth of the electrode pair for copper.
constexpr double kElectrodeLinewidthCopper = 121e3;
constexpr double kCopperConductivity = 5.8e7;
constexpr double kResidualPerTesla = 2.2e-9 / 1e-6;  // ohm per tesla at 1 GHz

void require_calibrated(ModeIndex mode) {
    if (!(mode == ModeIndex{3, 0, 1})) {
        throw UnsupportedError("electrode losses are calibrated for TE301 only, not " +
                               mode.label());
    }
}

}  // namespace

void MaterialSpec::validate() const {
    if (!superconducting && !(conductivity > 0.0 && std::isfinite(conductivity))) {
        throw ValidationError("material '" + name + "' needs a positive conductivity");
    }
    if (!(trapped_field >= 0.0)) {
        throw ValidationError("material '" + name + "' has a negative trapped field");
    }
}

double surface_resistivity(double conductivity, double frequency) {
    if (!(conductivity > 0.0) || !(frequency > 0.0)) {
        throw ValidationError("surface_resistivity needs positive conductivity and frequency");
    }
    return std::sqrt(constants::mu0 * 2.0 * constants::pi * frequency / conductivity);
}

double trapped_flux_resistance(double trapped_field, double frequency) {
    if (!(trapped_field >= 0.0)) throw ValidationError("trapped field must be non-negative");
    if (!(frequency > 0.0)) throw ValidationError("frequency must be positive");
    return kResidualPerTesla * trapped_field * std::sqrt(frequency / 1e9);
}

double electrode_linewidth(double conductivity, ModeIndex mode) {
    require_calibrated(mode);
    if (!(conductivity > 0.0)) throw ValidationError("conductivity must be positive");
    if (std::isinf(conductivity)) return 0.0;
    return kElectrodeLinewidthCopper * std::sqrt(kCopperConductivity / conductivity);
}

double conductivity_from_linewidth(double linewidth, ModeIndex mode) {
    require_calibrated(mode);
    if (!(linewidth > 0.0) || !std::isfinite(linewidth)) {
        throw ValidationError("linewidth increase must be positive to infer a conductivity");
    }
    const double r = kElectrodeLinewidthCopper / linewidth;
    return kCopperConductivity * r * r;
}

QualityFactors quality_factors(double frequency, double linewidth, double amplitude) {
    if (!(frequency > 0.0) || !(linewidth > 0.0)) {
        throw ValidationError("quality_factors needs positive frequency and linewidth");
    }
    if (!(amplitude >= 0.0)) throw ValidationError("transmission amplitude must be non-negative");
    if (amplitude >= 1.0) {
        throw ValidationError("on-resonance transmission amplitude must be below 1");
    }
    QualityFactors q;
    q.loaded = frequency / linewidth;
    q.internal = q.loaded / (1.0 - amplitude);
    return q;
}

std::optional<double> trapped_flux_q_limit(const CavityGeometry& geometry, ModeIndex mode,
                                           double trapped_field) {
    const double nu = resonance_frequency(geometry, mode);
    const double r = trapped_flux_resistance(trapped_field, nu);
    if (r == 0.0) return std::nullopt;
    return geometry_factor(geometry, mode) / r;
}

LossBudget loss_budget(const CavityGeometry& geometry, ModeIndex mode, double base_linewidth,
                       const MaterialSpec& electrodes, double trapped_field, double amplitude) {
    electrodes.validate();
    if (!(base_linewidth >= 0.0)) throw ValidationError("base linewidth must be non-negative");
    if (!(amplitude >= 0.0 && amplitude < 1.0)) {
        throw ValidationError("on-resonance transmission amplitude must lie in [0, 1)");
    }
    LossBudget b;
    b.mode = mode;
    b.frequency = resonance_frequency(geometry, mode);
    b.base = base_linewidth;
    if (!electrodes.superconducting && !geometry.electrodes.empty()) {
        b.electrode = electrode_linewidth(electrodes.conductivity, mode);
    }
    if (auto q = trapped_flux_q_limit(geometry, mode, trapped_field)) {
        b.trapped_flux = b.frequency / *q;
    }
    const double internal = b.base + b.electrode + b.trapped_flux;
    if (!(internal > 0.0)) throw ValidationError("loss budget has no dissipation");
    const double total = internal / (1.0 - amplitude);
    b.coupling = total - internal;
    b.total = b.base + b.electrode + b.trapped_flux + b.coupling;
    b.loaded_q = b.frequency / b.total;
    b.internal_q = b.frequency / internal;
    return b;
}

}  // namespace biascav
