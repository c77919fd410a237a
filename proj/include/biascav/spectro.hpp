#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "biascav/field_map.hpp"
#include "biascav/fieldsolve.hpp"

namespace biascav {

/// Two Rydberg transitions (m = +1 and m = -1 final states) with linear Zeeman and
/// quadratic Stark shifts.
struct RydbergSystem {
    double field_free_frequency = 20.542e9;  ///< Hz
    double offset_plus = -2.5e6;             ///< zero-field offset of the +1 line, Hz
    double offset_minus = -0.5e6;            ///< zero-field offset of the -1 line, Hz
    double polarizability = 4.44e4;          ///< |delta alpha|, Hz / (V/m)^2
    double g_l = 1.0;
    double homogeneous_width = 1.0e6;        ///< Gaussian sigma, Hz

    void validate() const;
};

/// Fields below this are outside the linear-Zeeman regime.
inline constexpr double kPaschenBackThreshold = 3.0e-4;  // tesla

struct TransitionPair {
    double plus = 0.0;   ///< Hz
    double minus = 0.0;  ///< Hz
    bool unresolved_regime = false;  ///< 0 < B < 3 G
};

/// mu_B g_L B / h in Hz.
[[nodiscard]] double zeeman_shift(const RydbergSystem& system, double b_field);
/// -|delta alpha| E^2 / 2 in Hz; `e_field` in V/m.
[[nodiscard]] double stark_shift(const RydbergSystem& system, double e_field);
[[nodiscard]] TransitionPair transition_frequencies(const RydbergSystem& system, double e_field,
                                                    double b_field);

struct FrequencyGrid {
    double start = 0.0;
    double stop = 0.0;
    int points = 0;

    void validate() const;
    [[nodiscard]] std::vector<double> values() const;
};

struct SpectrumRequest {
    Cloud cloud;
    double b_field = 0.0;         ///< uniform field in tesla, used when no magnetic map is given
    double e_scale = 1.0;         ///< multiplies the electric map (e.g. a scaled drive voltage)
    FrequencyGrid grid;
    int samples = 20000;
    std::uint64_t seed = 1;
    std::optional<FieldMap> magnetic_map;  ///< local |B| replaces b_field when present
};

struct SpectralLine {
    std::vector<double> frequency;  ///< Hz
    std::vector<double> signal;     ///< peak-normalized
    std::uint64_t seed = 0;
    int samples = 0;
    double mean_stark_shift = 0.0;  ///< cloud average, Hz
};

/// Monte Carlo over Gaussian atom positions, truncated at 4 sigma per axis. Each atom
/// contributes a Gaussian of width sigma_h at each of its two transition frequencies.
[[nodiscard]] SpectralLine synthesize_spectrum(const RydbergSystem& system,
                                               const FieldMap& electric_map,
                                               const SpectrumRequest& request);

struct LineFit {
    double center_high = 0.0;   ///< Hz; the +1 line above the Paschen-Back threshold
    double center_low = 0.0;    ///< Hz
    double width = 0.0;         ///< common Gaussian sigma, Hz
    double amplitude_high = 0.0;
    double amplitude_low = 0.0;
    double baseline = 0.0;
    Eigen::MatrixXd covariance;
    double rss = 0.0;
    bool resolved = false;      ///< separation above FWHM; otherwise single-Gaussian fit

    [[nodiscard]] double fwhm() const;
};

[[nodiscard]] LineFit fit_spectrum(const SpectralLine& line);

/// Double Gaussian with the line separation held at `splitting` (Hz, high minus low), for
/// a pair whose Zeeman splitting is known. Both centres are always reported; `resolved`
/// still follows the separation-above-FWHM rule.
[[nodiscard]] LineFit fit_zeeman_doublet(const SpectralLine& line, double splitting);

struct Broadening {
    double field_width = 0.0;           ///< sigma_nu,E in Hz
    double relative_inhomogeneity = 0.0; ///< sigma_E / E
};

/// Quadrature subtraction of the field-free width, then sigma_E/E = sigma_nu,E / (2 |dnu|).
[[nodiscard]] Broadening broadening_analysis(double width_at_field, double width_at_zero,
                                             double stark_shift);

struct CalibrationPoint {
    double current = 0.0;   ///< A
    double nu_plus = 0.0;   ///< Hz
    double nu_minus = 0.0;  ///< Hz
    double weight = 1.0;
};

struct Calibration {
    double gauss_per_ampere = 0.0;
    double intercept_plus = 0.0;   ///< Hz at zero current
    double intercept_minus = 0.0;  ///< Hz
};

/// Joint weighted fit nu_plus = a_plus + k I, nu_minus = a_minus - k I with
/// k = mu_B g_L (slope I) / h.
[[nodiscard]] Calibration linear_calibration_fit(const RydbergSystem& system,
                                                 const std::vector<CalibrationPoint>& points);

/// Columns frequency_Hz, signal.
void write_spectrum_csv(const std::filesystem::path& path, const SpectralLine& line);
[[nodiscard]] SpectralLine read_spectrum_csv(const std::filesystem::path& path);

}  // namespace biascav
