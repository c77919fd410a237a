#include "biascav/spectro.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/QR>

#include "biascav/constants.hpp"
#include "biascav/csv.hpp"
#include "biascav/error.hpp"
#include "biascav/least_squares.hpp"

namespace biascav {

namespace {

constexpr double kFwhmPerSigma = 2.354820045030949;  // 2 sqrt(2 ln 2)

double zeeman_per_tesla(const RydbergSystem& s) {
    return constants::bohr_magneton * s.g_l / constants::planck;
}

}  // namespace

void RydbergSystem::validate() const {
    if (!(field_free_frequency > 0.0)) throw ValidationError("field-free frequency must be positive");
    if (!(homogeneous_width > 0.0)) throw ValidationError("homogeneous width must be positive");
    if (!(polarizability >= 0.0)) {
        throw ValidationError("polarizability difference is given as a magnitude (>= 0)");
    }
    if (std::abs(offset_plus) > 1e-3 * field_free_frequency ||
        std::abs(offset_minus) > 1e-3 * field_free_frequency) {
        throw ValidationError("zero-field offsets must be small relative to the line frequency");
    }
}

double zeeman_shift(const RydbergSystem& system, double b_field) {
    return zeeman_per_tesla(system) * b_field;
}

double stark_shift(const RydbergSystem& system, double e_field) {
    return -0.5 * system.polarizability * e_field * e_field;
}

TransitionPair transition_frequencies(const RydbergSystem& system, double e_field,
                                      double b_field) {
    if (!(e_field >= 0.0)) throw ValidationError("electric field magnitude must be >= 0");
    if (!(b_field >= 0.0)) throw ValidationError("magnetic field magnitude must be >= 0");
    const double z = zeeman_shift(system, b_field);
    const double s = stark_shift(system, e_field);
    TransitionPair t;
    t.plus = system.field_free_frequency + system.offset_plus + z + s;
    t.minus = system.field_free_frequency + system.offset_minus - z + s;
    t.unresolved_regime = b_field > 0.0 && b_field < kPaschenBackThreshold;
    return t;
}

void FrequencyGrid::validate() const {
    if (points < 20) throw ValidationError("frequency grid needs at least 20 points");
    if (!(stop > start)) throw ValidationError("frequency grid must be increasing");
}

std::vector<double> FrequencyGrid::values() const {
    validate();
    std::vector<double> v(static_cast<std::size_t>(points));
    const double step = (stop - start) / (points - 1);
    for (int i = 0; i < points; ++i) v[static_cast<std::size_t>(i)] = start + i * step;
    return v;
}

SpectralLine synthesize_spectrum(const RydbergSystem& system, const FieldMap& electric_map,
                                 const SpectrumRequest& request) {
    system.validate();
    request.grid.validate();
    if (request.samples < 1000) throw ValidationError("spectrum synthesis needs >= 1000 samples");
    if (!(request.cloud.diameter >= 0.0)) throw ValidationError("cloud diameter must be >= 0");
    if (!(request.b_field >= 0.0)) throw ValidationError("magnetic field must be >= 0");

    const double sigma = request.cloud.sigma();
    const double half = request.cloud.support();
    auto check_cover = [&](const FieldMap& map, const char* what) {
        const Vec3 c = map.center() + request.cloud.offset;
        for (int a = 0; a < 3; ++a) {
            if (c[a] - half < map.origin()[a] - 1e-12 || c[a] + half > map.upper()[a] + 1e-12) {
                throw ValidationError(std::string("cloud extends outside the ") + what + " map");
            }
        }
    };
    check_cover(electric_map, "electric field");
    if (request.magnetic_map) check_cover(*request.magnetic_map, "magnetic field");

    std::mt19937_64 rng(request.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto draw = [&] {
        if (sigma == 0.0) return 0.0;
        for (;;) {
            const double u = normal(rng);
            if (std::abs(u) <= 4.0) return u * sigma;
        }
    };

    const auto n = static_cast<std::size_t>(request.samples);
    std::vector<double> lines;
    lines.reserve(2 * n);
    double stark_sum = 0.0;
    const Vec3 e_center = electric_map.center() + request.cloud.offset;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = draw();
        const double dy = draw();
        const double dz = draw();
        const Vec3 d(dx, dy, dz);
        const double e = request.e_scale * electric_map.sample(e_center + d).norm();
        double b = request.b_field;
        if (request.magnetic_map) {
            const auto& bm = *request.magnetic_map;
            b = bm.sample(bm.center() + request.cloud.offset + d).norm();
        }
        const auto t = transition_frequencies(system, std::abs(e), b);
        lines.push_back(t.plus);
        lines.push_back(t.minus);
        stark_sum += stark_shift(system, e);
    }

    SpectralLine out;
    out.frequency = request.grid.values();
    out.signal.assign(out.frequency.size(), 0.0);
    out.seed = request.seed;
    out.samples = request.samples;
    out.mean_stark_shift = stark_sum / static_cast<double>(n);
    const double inv2s2 = 1.0 / (2.0 * system.homogeneous_width * system.homogeneous_width);
    const double cutoff = 10.0 * system.homogeneous_width;
    for (std::size_t k = 0; k < out.frequency.size(); ++k) {
        const double f = out.frequency[k];
        double acc = 0.0;
        for (double nu : lines) {
            const double d = f - nu;
            if (std::abs(d) < cutoff) acc += std::exp(-d * d * inv2s2);
        }
        out.signal[k] = acc;
    }
    const double peak = *std::max_element(out.signal.begin(), out.signal.end());
    if (!(peak > 0.0)) throw ValidationError("no transitions fall inside the frequency grid");
    for (double& s : out.signal) s /= peak;
    return out;
}

double LineFit::fwhm() const { return kFwhmPerSigma * width; }

namespace {

struct PeakGuess {
    std::size_t index;
    double value;
};

std::vector<PeakGuess> local_maxima(const std::vector<double>& y) {
    // Five-point moving average keeps noise from producing spurious maxima.
    const std::size_t n = y.size();
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= 2 ? i - 2 : 0;
        const std::size_t hi = std::min(n - 1, i + 2);
        s[i] = std::accumulate(y.begin() + lo, y.begin() + hi + 1, 0.0) / double(hi - lo + 1);
    }
    std::vector<PeakGuess> peaks;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (s[i] >= s[i - 1] && s[i] > s[i + 1]) peaks.push_back({i, s[i]});
    }
    if (peaks.empty()) {
        const auto it = std::max_element(s.begin(), s.end());
        peaks.push_back({static_cast<std::size_t>(it - s.begin()), *it});
    }
    std::sort(peaks.begin(), peaks.end(),
              [](const PeakGuess& a, const PeakGuess& b) { return a.value > b.value; });
    return peaks;
}

// Model: sum of `count` Gaussians with a shared width plus a constant.
// Parameters: [a_1, c_1, ..., a_count, c_count, w, b] in scaled units.
LeastSquaresProblem gaussian_problem(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                     int count) {
    LeastSquaresProblem p;
    p.residual_count = x.size();
    p.residuals = [&x, &y, count](const Eigen::VectorXd& q, Eigen::VectorXd& r) {
        const double w = q[2 * count];
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            double m = q[2 * count + 1];
            for (int g = 0; g < count; ++g) {
                const double d = x[i] - q[2 * g + 1];
                m += q[2 * g] * std::exp(-d * d / (2.0 * w * w));
            }
            r[i] = m - y[i];
        }
    };
    p.jacobian = [&x, count](const Eigen::VectorXd& q, Eigen::MatrixXd& j) {
        const double w = q[2 * count];
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            double dw = 0.0;
            for (int g = 0; g < count; ++g) {
                const double d = x[i] - q[2 * g + 1];
                const double e = std::exp(-d * d / (2.0 * w * w));
                j(i, 2 * g) = e;
                j(i, 2 * g + 1) = q[2 * g] * e * d / (w * w);
                dw += q[2 * g] * e * d * d / (w * w * w);
            }
            j(i, 2 * count) = dw;
            j(i, 2 * count + 1) = 1.0;
        }
    };
    return p;
}

}  // namespace

LineFit fit_spectrum(const SpectralLine& line) {
    const std::size_t n = line.frequency.size();
    if (n < 20 || line.signal.size() != n) {
        throw ValidationError("spectral line needs >= 20 samples with matching signal values");
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (!(line.frequency[i] > line.frequency[i - 1])) {
            throw ValidationError("spectral line frequency grid must be strictly increasing");
        }
    }
    for (double s : line.signal) {
        if (!std::isfinite(s)) throw ValidationError("spectral line has non-finite values");
    }

    // Fit in MHz about the grid centre for conditioning.
    constexpr double scale = 1e6;
    const double ref = 0.5 * (line.frequency.front() + line.frequency.back());
    Eigen::VectorXd x(static_cast<Eigen::Index>(n));
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        x[static_cast<Eigen::Index>(i)] = (line.frequency[i] - ref) / scale;
        y[static_cast<Eigen::Index>(i)] = line.signal[i];
    }
    const double step = (x[x.size() - 1] - x[0]) / double(n - 1);
    const double base0 = y.minCoeff();

    const auto peaks = local_maxima(line.signal);
    const auto main = peaks.front();
    // Half-maximum width of the main peak.
    const double half = base0 + 0.5 * (y[Eigen::Index(main.index)] - base0);
    std::size_t lo = main.index;
    std::size_t hi = main.index;
    while (lo > 0 && y[Eigen::Index(lo)] > half) --lo;
    while (hi + 1 < n && y[Eigen::Index(hi)] > half) ++hi;
    const double w0 = std::max(step, (x[Eigen::Index(hi)] - x[Eigen::Index(lo)]) / kFwhmPerSigma);

    std::optional<PeakGuess> second;
    for (std::size_t k = 1; k < peaks.size(); ++k) {
        const auto gap = peaks[k].index > main.index ? peaks[k].index - main.index
                                                     : main.index - peaks[k].index;
        if (gap >= 3 && peaks[k].value > base0 + 0.1 * (main.value - base0)) {
            second = peaks[k];
            break;
        }
    }

    LineFit fit;
    auto finish_single = [&] {
        const auto prob = gaussian_problem(x, y, 1);
        Eigen::VectorXd start(4);
        start << y[Eigen::Index(main.index)] - base0, x[Eigen::Index(main.index)], w0, base0;
        const auto r = least_squares(prob, start);
        fit.center_high = fit.center_low = ref + scale * r.params[1];
        fit.amplitude_high = fit.amplitude_low = r.params[0];
        fit.width = scale * std::abs(r.params[2]);
        fit.baseline = r.params[3];
        fit.covariance = r.covariance;
        fit.rss = r.rss;
        fit.resolved = false;
        return fit;
    };

    Eigen::VectorXd start(6);
    const double c1 = x[Eigen::Index(main.index)];
    const double c2 = second ? x[Eigen::Index(second->index)] : c1 + w0;
    const double a1 = y[Eigen::Index(main.index)] - base0;
    const double a2 = second ? y[Eigen::Index(second->index)] - base0 : 0.5 * a1;
    start << a1, c1, a2, c2, second ? w0 * 0.5 : w0 * 0.5, base0;
    if (second) {
        // Overlapping peaks inflate the half-maximum width; bound it by the separation.
        start[4] = std::min(w0, std::abs(c2 - c1) / kFwhmPerSigma);
        start[4] = std::max(start[4], step);
    }

    LeastSquaresResult r;
    try {
        r = least_squares(gaussian_problem(x, y, 2), start);
    } catch (const ConvergenceError&) {
        return finish_single();
    }
    const double w = std::abs(r.params[4]);
    const double sep = std::abs(r.params[3] - r.params[1]);
    if (!(sep > kFwhmPerSigma * w) || !(r.params[0] > 0.0) || !(r.params[2] > 0.0)) {
        return finish_single();
    }
    const bool first_high = r.params[1] > r.params[3];
    const int hi_i = first_high ? 0 : 2;
    const int lo_i = first_high ? 2 : 0;
    fit.center_high = ref + scale * r.params[hi_i + 1];
    fit.center_low = ref + scale * r.params[lo_i + 1];
    fit.amplitude_high = r.params[hi_i];
    fit.amplitude_low = r.params[lo_i];
    fit.width = scale * w;
    fit.baseline = r.params[5];
    fit.covariance = r.covariance;
    fit.rss = r.rss;
    fit.resolved = true;
    return fit;
}

LineFit fit_zeeman_doublet(const SpectralLine& line, double splitting) {
    const std::size_t n = line.frequency.size();
    if (n < 20 || line.signal.size() != n) {
        throw ValidationError("spectral line needs >= 20 samples with matching signal values");
    }
    if (!(splitting > 0.0) || !std::isfinite(splitting)) {
        throw ValidationError("doublet splitting must be positive");
    }
    constexpr double scale = 1e6;
    const double ref = 0.5 * (line.frequency.front() + line.frequency.back());
    Eigen::VectorXd x(static_cast<Eigen::Index>(n));
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        x[Eigen::Index(i)] = (line.frequency[i] - ref) / scale;
        y[Eigen::Index(i)] = line.signal[i];
    }
    const double half_split = 0.5 * splitting / scale;
    const double step = (x[x.size() - 1] - x[0]) / double(n - 1);
    const double base0 = y.minCoeff();

    // Centre of mass above half maximum and the width left after removing the splitting.
    Eigen::Index imax = 0;
    const double ymax = y.maxCoeff(&imax);
    const double half = base0 + 0.5 * (ymax - base0);
    double m0 = 0.0;
    double m1 = 0.0;
    double lo = x[imax];
    double hi = x[imax];
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (y[i] <= half) continue;
        m0 += y[i] - base0;
        m1 += (y[i] - base0) * x[i];
        lo = std::min(lo, x[i]);
        hi = std::max(hi, x[i]);
    }
    const double sigma_all = (hi - lo) / kFwhmPerSigma;
    const double w0 = std::max(step, std::sqrt(std::max(0.0, sigma_all * sigma_all - half_split * half_split)));

    // Parameters [a_high, a_low, c_mid, w, b].
    LeastSquaresProblem p;
    p.residual_count = x.size();
    p.residuals = [&](const Eigen::VectorXd& q, Eigen::VectorXd& r) {
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double dh = x[i] - q[2] - half_split;
            const double dl = x[i] - q[2] + half_split;
            const double s2 = 2.0 * q[3] * q[3];
            r[i] = q[0] * std::exp(-dh * dh / s2) + q[1] * std::exp(-dl * dl / s2) + q[4] - y[i];
        }
    };
    p.jacobian = [&](const Eigen::VectorXd& q, Eigen::MatrixXd& j) {
        const double w = q[3];
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double dh = x[i] - q[2] - half_split;
            const double dl = x[i] - q[2] + half_split;
            const double eh = std::exp(-dh * dh / (2.0 * w * w));
            const double el = std::exp(-dl * dl / (2.0 * w * w));
            j(i, 0) = eh;
            j(i, 1) = el;
            j(i, 2) = (q[0] * eh * dh + q[1] * el * dl) / (w * w);
            j(i, 3) = (q[0] * eh * dh * dh + q[1] * el * dl * dl) / (w * w * w);
            j(i, 4) = 1.0;
        }
    };
    Eigen::VectorXd start(5);
    start << ymax - base0, ymax - base0, m0 > 0.0 ? m1 / m0 : x[imax], w0, base0;
    const auto r = least_squares(p, start);

    LineFit fit;
    fit.center_high = ref + scale * (r.params[2] + half_split);
    fit.center_low = ref + scale * (r.params[2] - half_split);
    fit.amplitude_high = r.params[0];
    fit.amplitude_low = r.params[1];
    fit.width = scale * std::abs(r.params[3]);
    fit.baseline = r.params[4];
    fit.covariance = r.covariance;
    fit.rss = r.rss;
    fit.resolved = splitting > kFwhmPerSigma * fit.width;
    return fit;
}

Broadening broadening_analysis(double width_at_field, double width_at_zero, double stark_shift) {
    if (!(width_at_zero > 0.0)) throw ValidationError("field-free width must be positive");
    if (width_at_field < width_at_zero) {
        throw ValidationError("width at field is below the field-free width");
    }
    if (stark_shift == 0.0 || !std::isfinite(stark_shift)) {
        throw ValidationError("Stark shift must be non-zero");
    }
    Broadening b;
    b.field_width = std::sqrt(width_at_field * width_at_field - width_at_zero * width_at_zero);
    b.relative_inhomogeneity = b.field_width / (2.0 * std::abs(stark_shift));
    return b;
}

Calibration linear_calibration_fit(const RydbergSystem& system,
                                   const std::vector<CalibrationPoint>& points) {
    system.validate();
    if (points.size() < 3) throw ValidationError("calibration needs at least 3 points");
    const auto m = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * m, 3);
    Eigen::VectorXd b(2 * m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto& p = points[static_cast<std::size_t>(i)];
        if (!(p.weight > 0.0)) throw ValidationError("calibration weights must be positive");
        const double sw = std::sqrt(p.weight);
        a(2 * i, 0) = sw;
        a(2 * i, 2) = sw * p.current;
        b[2 * i] = sw * p.nu_plus;
        a(2 * i + 1, 1) = sw;
        a(2 * i + 1, 2) = -sw * p.current;
        b[2 * i + 1] = sw * p.nu_minus;
    }
    // Centre the unknown frequencies so the intercept columns stay well scaled.
    const double ref = system.field_free_frequency;
    for (Eigen::Index i = 0; i < m; ++i) {
        const double sw = a(2 * i, 0);
        b[2 * i] -= sw * ref;
        b[2 * i + 1] -= sw * ref;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < 3) throw ValidationError("calibration data are rank-deficient");
    const Eigen::Vector3d sol = qr.solve(b);
    Calibration c;
    c.intercept_plus = ref + sol[0];
    c.intercept_minus = ref + sol[1];
    c.gauss_per_ampere = sol[2] / zeeman_per_tesla(system) / constants::gauss;
    return c;
}

void write_spectrum_csv(const std::filesystem::path& path, const SpectralLine& line) {
    CsvTable t;
    t.comments.push_back("synthesized spectral line; seed=" + std::to_string(line.seed) +
                         " samples=" + std::to_string(line.samples));
    t.header = {"frequency_Hz", "signal"};
    for (std::size_t i = 0; i < line.frequency.size(); ++i) {
        t.rows.push_back({line.frequency[i], line.signal[i]});
    }
    write_csv(path, t);
}

SpectralLine read_spectrum_csv(const std::filesystem::path& path) {
    const auto t = read_csv(path);
    const auto f = t.column("frequency_Hz");
    const auto s = t.column("signal");
    SpectralLine line;
    for (const auto& r : t.rows) {
        line.frequency.push_back(r[f]);
        line.signal.push_back(r[s]);
    }
    return line;
}

}  // namespace biascav
