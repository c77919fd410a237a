#include "biascav/txn.hpp"

#include <algorithm>
#include <cmath>

#include "biascav/constants.hpp"
#include "biascav/csv.hpp"
#include "biascav/error.hpp"
#include "biascav/least_squares.hpp"

namespace biascav {

namespace {

void check_rates(double linewidth, double port_coupling) {
    if (!(linewidth > 0.0) || !(port_coupling > 0.0)) {
        throw ValidationError("linewidth and port coupling must be positive");
    }
    if (2.0 * port_coupling > linewidth * (1.0 + 1e-12)) {
        throw ValidationError("port coupling exceeds half the total linewidth");
    }
}

}  // namespace

double s21_amplitude(double linewidth, double port_coupling, double detuning) {
    check_rates(linewidth, port_coupling);
    const double half = 0.5 * linewidth;
    return port_coupling / std::sqrt(detuning * detuning + half * half);
}

LorentzianFit fit_lorentzian(const TransmissionTrace& trace) {
    const std::size_t n = trace.detuning.size();
    if (n < 15 || trace.amplitude.size() != n) {
        throw ValidationError("Lorentzian fit needs >= 15 samples with matching amplitudes");
    }
    Eigen::VectorXd x(static_cast<Eigen::Index>(n));
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        x[Eigen::Index(i)] = trace.detuning[i];
        y[Eigen::Index(i)] = trace.amplitude[i] * trace.amplitude[i];
    }
    const double span = x.maxCoeff() - x.minCoeff();

    // Start from the sample peak and its half-power crossings.
    Eigen::Index imax = 0;
    const double pmax = y.maxCoeff(&imax);
    Eigen::Index lo = imax;
    Eigen::Index hi = imax;
    while (lo > 0 && y[lo] > 0.5 * pmax) --lo;
    while (hi + 1 < y.size() && y[hi] > 0.5 * pmax) ++hi;
    if (y[lo] > 0.5 * pmax || y[hi] > 0.5 * pmax) {
        throw ValidationError("trace does not reach half power on both sides of the peak");
    }
    const double kappa0 = x[hi] - x[lo];
    if (span < 3.0 * kappa0) {
        throw ValidationError("trace spans fewer than three linewidths");
    }

    // Parameters [A, c, g] with g = kappa/2, scaled by the initial linewidth.
    const double s = kappa0;
    const Eigen::VectorXd u = (x.array() - x[imax]) / s;
    LeastSquaresProblem p;
    p.residual_count = u.size();
    p.residuals = [&](const Eigen::VectorXd& q, Eigen::VectorXd& r) {
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            const double t = (u[i] - q[1]) / q[2];
            r[i] = q[0] / (1.0 + t * t) - y[i];
        }
    };
    p.jacobian = [&](const Eigen::VectorXd& q, Eigen::MatrixXd& j) {
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            const double t = (u[i] - q[1]) / q[2];
            const double l = 1.0 / (1.0 + t * t);
            j(i, 0) = l;
            j(i, 1) = q[0] * l * l * 2.0 * t / q[2];
            j(i, 2) = q[0] * l * l * 2.0 * t * t / q[2];
        }
    };
    Eigen::VectorXd start(3);
    start << pmax, 0.0, 0.5;
    const auto r = least_squares(p, start);

    LorentzianFit f;
    f.center = x[imax] + s * r.params[1];
    f.linewidth = 2.0 * s * std::abs(r.params[2]);
    f.peak = std::sqrt(std::max(0.0, r.params[0]));
    f.rss = r.rss;
    if (span < 3.0 * f.linewidth) throw ValidationError("trace spans fewer than three linewidths");
    return f;
}

TransmissionTrace normalized(const TransmissionTrace& trace, const LorentzianFit& fit) {
    if (!(fit.peak > 0.0)) throw ValidationError("fitted peak must be positive to normalize");
    TransmissionTrace out = trace;
    for (double& a : out.amplitude) a /= fit.peak;
    return out;
}

double photon_number(double power, double frequency, double linewidth, double port_coupling,
                     double detuning) {
    check_rates(linewidth, port_coupling);
    if (!(power >= 0.0) || !(frequency > 0.0)) {
        throw ValidationError("drive power must be >= 0 and frequency positive");
    }
    const double two_pi = 2.0 * constants::pi;
    const double ke = two_pi * port_coupling;
    const double k = two_pi * linewidth;
    const double d = two_pi * detuning;
    const double photon_flux = power / (constants::planck * frequency);
    return ke * photon_flux / (d * d + 0.25 * k * k);
}

double thermal_occupation(double temperature, double frequency) {
    if (!(temperature >= 0.0) || !(frequency > 0.0)) {
        throw ValidationError("temperature must be >= 0 and frequency positive");
    }
    if (temperature == 0.0) return 0.0;
    const double x = constants::planck * frequency / (constants::boltzmann * temperature);
    return 1.0 / std::expm1(x);
}

void write_trace_csv(const std::filesystem::path& path, const TransmissionTrace& trace) {
    CsvTable t;
    t.comments.push_back("transmission trace; drive_power_W=" + format_number(trace.drive_power) +
                         " temperature_K=" + format_number(trace.temperature));
    t.header = {"detuning_Hz", "amplitude"};
    for (std::size_t i = 0; i < trace.detuning.size(); ++i) {
        t.rows.push_back({trace.detuning[i], trace.amplitude[i]});
    }
    write_csv(path, t);
}

TransmissionTrace read_trace_csv(const std::filesystem::path& path) {
    const auto t = read_csv(path);
    const auto d = t.column("detuning_Hz");
    const auto a = t.column("amplitude");
    TransmissionTrace trace;
    for (const auto& r : t.rows) {
        trace.detuning.push_back(r[d]);
        trace.amplitude.push_back(r[a]);
    }
    return trace;
}

}  // namespace biascav
