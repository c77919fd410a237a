#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "biascav/fieldsolve.hpp"
#include "biascav/geometry.hpp"
#include "biascav/lossmodel.hpp"
#include "biascav/spectro.hpp"
#include "biascav/tuning.hpp"

namespace biascav {

inline constexpr int kSchemaVersion = 1;

enum class ScenarioKind { Modes, Fields, Losses, Tuning, Spectrum, Transmission };

[[nodiscard]] std::string to_string(ScenarioKind kind);
[[nodiscard]] ScenarioKind scenario_kind_from_string(const std::string& s);

struct ModesParams {
    std::vector<ModeIndex> modes;
    std::vector<std::optional<double>> measured;  ///< Hz, aligned with `modes`
};

struct FieldsParams {
    std::optional<std::array<double, 2>> electrode_voltages;
    std::optional<double> b_ext;  ///< tesla
    Vec3 direction = Vec3::UnitZ();
    Vec3 region_size = Vec3::Constant(2e-3);
    Cloud cloud;
    bool export_maps = true;
};

struct MeasuredLinewidth {
    std::string name;
    double linewidth = 0.0;  ///< total kappa/2pi with the electrodes installed, Hz
};

struct LossesParams {
    ModeIndex mode{3, 0, 1};
    double base_linewidth = 0.0;
    double amplitude = 0.0;
    MaterialSpec electrodes;
    double trapped_field = 0.0;
    std::vector<MeasuredLinewidth> measured;
};

struct RodSweep {
    RodInsertion rod;
    std::vector<double> depths;
};

struct TuningParams {
    ModeIndex mode{3, 0, 1};
    LocalField local_field = LocalField::QuasiStatic;
    std::vector<RodSweep> rods;
};

struct StarkScan {
    double b_field = 0.0;
    std::vector<double> voltages;  ///< v2 values, v1 held at 0
};

struct SpectrumParams {
    RydbergSystem system;
    std::array<double, 2> electrode_voltages{0.0, 1.0};
    std::optional<std::filesystem::path> field_map;  ///< reuse an exported electric map
    std::optional<double> residual_field;            ///< rescale so the cloud mean is this, V/m
    Cloud cloud;
    int samples = 20000;
    double detuning_start = -25e6;  ///< relative to the field-free frequency, Hz
    double detuning_stop = 25e6;
    int points = 401;
    double gauss_per_ampere = 5.1;
    std::vector<double> currents;   ///< calibration sweep, A
    std::optional<StarkScan> stark;
};

struct TransmissionParams {
    double frequency = 20.56e9;
    double linewidth = 12.4e3;
    double port_coupling = 0.0;  ///< per port; 0 picks the undercoupled default linewidth / 20
    double temperature = 0.0;
    std::vector<double> powers;  ///< W
    int points = 201;
    double span_linewidths = 10.0;
    double noise = 0.0;          ///< relative Gaussian noise on the amplitude
};

struct Scenario {
    ScenarioKind kind = ScenarioKind::Modes;
    int schema_version = kSchemaVersion;
    std::optional<std::uint64_t> seed;
    CavityGeometry geometry;
    GridSpec grid = GridSpec::electrostatic_default();
    GridSpec magnetic_grid = GridSpec::magnetostatic_default();
    ModesParams modes;
    FieldsParams fields;
    LossesParams losses;
    TuningParams tuning;
    SpectrumParams spectrum;
    TransmissionParams transmission;
    std::filesystem::path output_dir;  ///< from output.dir; empty when unset
    std::string config_hash;  ///< FNV-1a of the canonical config, output paths excluded
};

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::array<int, 3>> grid;
};

/// Parses a YAML config. Schema violations throw ValidationError with line:column.
[[nodiscard]] Scenario parse_scenario(const std::string& text, const Overrides& overrides = {},
                                      const std::filesystem::path& base_dir = {});
[[nodiscard]] Scenario load_scenario(const std::filesystem::path& path,
                                     const Overrides& overrides = {});

/// "NXxNYxNZ" -> cells.
[[nodiscard]] std::array<int, 3> parse_grid(const std::string& text);

struct RunResult {
    std::vector<std::filesystem::path> files;  ///< written outputs, summary last
    std::string summary;                       ///< summary.json contents
};

/// Runs the scenario and writes its CSV outputs and summary.json into `out_dir`.
[[nodiscard]] RunResult run_scenario(const Scenario& scenario,
                                     const std::filesystem::path& out_dir);

[[nodiscard]] std::string version();

}  // namespace biascav
