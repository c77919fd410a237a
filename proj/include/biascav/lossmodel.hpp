#pragma once

#include <optional>
#include <string>

#include "biascav/geometry.hpp"

namespace biascav {

/// Electrode or wall material.
struct MaterialSpec {
    std::string name = "copper";
    double conductivity = 5.8e7;  ///< S/m; ignored when superconducting
    bool superconducting = false;
    double trapped_field = 0.0;   ///< tesla

    void validate() const;
};

/// R_s = sqrt(mu0 * 2 pi nu / sigma), ohms.
[[nodiscard]] double surface_resistivity(double conductivity, double frequency);

/// Residual resistance of a superconductor with trapped flux:
/// 2.2 nOhm per uT times sqrt(nu / GHz).
[[nodiscard]] double trapped_flux_resistance(double trapped_field, double frequency);

/// Electrode-induced linewidth increase (kappa/2pi, Hz) of the TE301 mode for a pair of
/// electrodes of conductivity `sigma`. Other modes are not calibrated.
[[nodiscard]] double electrode_linewidth(double conductivity, ModeIndex mode = {3, 0, 1});

/// Exact inverse of electrode_linewidth.
[[nodiscard]] double conductivity_from_linewidth(double linewidth, ModeIndex mode = {3, 0, 1});

struct QualityFactors {
    double loaded = 0.0;
    double internal = 0.0;
};

/// `amplitude` is the on-resonance |S21| of the symmetric two-port cavity.
[[nodiscard]] QualityFactors quality_factors(double frequency, double linewidth, double amplitude);

/// Q = G / R_res. nullopt when nothing is trapped (no limit).
[[nodiscard]] std::optional<double> trapped_flux_q_limit(const CavityGeometry& geometry,
                                                         ModeIndex mode, double trapped_field);

/// Linewidth components (kappa/2pi, Hz). `coupling` is the part carried out through the
/// two ports; the rest is internal loss.
struct LossBudget {
    ModeIndex mode{3, 0, 1};
    double frequency = 0.0;
    double base = 0.0;
    double electrode = 0.0;
    double trapped_flux = 0.0;
    double coupling = 0.0;
    double total = 0.0;
    double loaded_q = 0.0;
    double internal_q = 0.0;
};

/// Builds a budget from a measured base linewidth, the electrode material, and the trapped
/// field in the walls. `amplitude` sets the coupling share as for quality_factors.
[[nodiscard]] LossBudget loss_budget(const CavityGeometry& geometry, ModeIndex mode,
                                     double base_linewidth, const MaterialSpec& electrodes,
                                     double trapped_field, double amplitude);

}  // namespace biascav
