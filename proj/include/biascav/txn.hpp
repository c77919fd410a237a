#pragma once

#include <filesystem>
#include <vector>

namespace biascav {

/// Transmission amplitude of a symmetric two-port resonator. `linewidth` is kappa/2pi
/// (power FWHM), `port_coupling` is kappa_ext/2pi per port, `detuning` in Hz.
[[nodiscard]] double s21_amplitude(double linewidth, double port_coupling, double detuning);

struct TransmissionTrace {
    std::vector<double> detuning;   ///< Hz
    std::vector<double> amplitude;  ///< |S21|, or normalized A_n
    double drive_power = 0.0;       ///< W
    double temperature = 0.0;       ///< K
};

struct LorentzianFit {
    double center = 0.0;     ///< Hz
    double linewidth = 0.0;  ///< power FWHM, Hz
    double peak = 0.0;       ///< peak amplitude
    double rss = 0.0;
};

/// Least-squares fit of |S21|^2 = A / (1 + ((d - c) / (kappa/2))^2). Needs >= 15 samples
/// spanning at least three linewidths.
[[nodiscard]] LorentzianFit fit_lorentzian(const TransmissionTrace& trace);

/// Trace normalized to its fitted peak.
[[nodiscard]] TransmissionTrace normalized(const TransmissionTrace& trace, const LorentzianFit& fit);

/// Mean intracavity photon number for drive power `power` at `detuning` (all rates /2pi).
[[nodiscard]] double photon_number(double power, double frequency, double linewidth,
                                   double port_coupling, double detuning);

/// Bose-Einstein occupation; 0 at T = 0.
[[nodiscard]] double thermal_occupation(double temperature, double frequency);

/// Columns detuning_Hz, amplitude.
void write_trace_csv(const std::filesystem::path& path, const TransmissionTrace& trace);
[[nodiscard]] TransmissionTrace read_trace_csv(const std::filesystem::path& path);

}  // namespace biascav
