#pragma once

#include <filesystem>
#include <vector>

#include "biascav/geometry.hpp"

namespace biascav {

enum class RodMaterial { Dielectric, Conductor };

/// Field used inside a dielectric rod. `Unperturbed` takes the empty-cavity field;
/// `QuasiStatic` scales it by 2/(eps_r + 1), the depolarization of a thin cylinder in a
/// transverse field.
enum class LocalField { Unperturbed, QuasiStatic };

/// Rod entering along +x through the side port, centred on the port.
struct RodInsertion {
    RodMaterial material = RodMaterial::Dielectric;
    double permittivity = 9.0;  ///< relative; dielectric only
    double diameter = 1.9e-3;
    double depth = 0.0;         ///< insertion depth from the x = 0 wall

    void validate(const CavityGeometry& geometry) const;
};

struct TuningOptions {
    LocalField local_field = LocalField::QuasiStatic;
    int axial_samples = 64;
    int radial_samples = 16;
    int angular_samples = 48;
};

struct TuningShift {
    double depth = 0.0;
    double shift = 0.0;           ///< Hz
    double relative = 0.0;        ///< shift / unperturbed frequency
    bool nonperturbative = false; ///< |relative| above 5%
};

[[nodiscard]] TuningShift perturbation_shift(const CavityGeometry& geometry, ModeIndex mode,
                                             const RodInsertion& rod,
                                             const TuningOptions& options = {});

/// Shift at each depth in `depths`, other rod parameters fixed.
[[nodiscard]] std::vector<TuningShift> tuning_curve(const CavityGeometry& geometry,
                                                    ModeIndex mode, RodInsertion rod,
                                                    const std::vector<double>& depths,
                                                    const TuningOptions& options = {});

/// Columns depth_m, shift_Hz.
void write_tuning_csv(const std::filesystem::path& path, const std::vector<TuningShift>& curve);

}  // namespace biascav
