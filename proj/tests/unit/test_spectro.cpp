#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"

#include "biascav/error.hpp"
#include "biascav/fieldsolve.hpp"
#include "biascav/spectro.hpp"

using namespace biascav;

namespace {

// mu_B / h from CODATA 2018, Hz per tesla.
const double kMuBOverH = 9.2740100783e-24 / 6.62607015e-34;

FieldMap uniform_e(double magnitude) {
    return FieldMap::uniform(FieldKind::Electric, {21, 21, 21}, Vec3::Constant(2e-4), Vec3::Zero(),
                             Vec3(magnitude, 0, 0));
}

// |E| = e0 (1 + x / 1 mm) about the map centre.
FieldMap gradient_e(double e0) {
    const GridShape s{21, 21, 21};
    const Vec3 h = Vec3::Constant(2e-4);
    std::vector<Vec3> v(s.size());
    for (int i = 0; i < s.nx; ++i)
        for (int j = 0; j < s.ny; ++j)
            for (int k = 0; k < s.nz; ++k) v[s.index(i, j, k)] = Vec3(e0 * (1.0 + (i - 10) * 0.2), 0, 0);
    return FieldMap(FieldKind::Electric, s, h, Vec3::Zero(), v);
}

SpectrumRequest request(double b, double diameter) {
    SpectrumRequest r;
    r.b_field = b;
    r.cloud.diameter = diameter;
    r.grid = FrequencyGrid{20.542e9 - 30e6, 20.542e9 + 30e6, 601};
    r.samples = 10000;
    r.seed = 7;
    return r;
}

SpectralLine two_gaussians(double c1, double c2, double sigma, double a1, double a2, double noise,
                           std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, noise);
    SpectralLine line;
    for (int i = 0; i < 401; ++i) {
        const double f = 20.5e9 - 20e6 + i * 0.1e6;
        const double s = a1 * std::exp(-0.5 * std::pow((f - c1) / sigma, 2)) +
                         a2 * std::exp(-0.5 * std::pow((f - c2) / sigma, 2)) + 0.02;
        line.frequency.push_back(f);
        line.signal.push_back(s + (noise > 0 ? n(rng) : 0.0));
    }
    return line;
}

}  // namespace

TEST_CASE("transition frequencies at zero and finite fields") {
    const RydbergSystem sys;
    const auto zero = transition_frequencies(sys, 0.0, 0.0);
    CHECK(zero.plus == doctest::Approx(20.542e9 - 2.5e6).epsilon(1e-15));
    CHECK(zero.minus == doctest::Approx(20.542e9 - 0.5e6).epsilon(1e-15));
    CHECK_FALSE(zero.unresolved_regime);

    const auto z = transition_frequencies(sys, 0.0, 7.2e-4);
    CHECK(z.plus - zero.plus == doctest::Approx(kMuBOverH * 7.2e-4).epsilon(1e-6));
    CHECK(z.plus - zero.plus == doctest::Approx(10.08e6).epsilon(1e-3));
    CHECK(zero.minus - z.minus == doctest::Approx(z.plus - zero.plus));

    CHECK(stark_shift(sys, 10.0) == doctest::Approx(-2.22e6));
    CHECK(transition_frequencies(sys, 10.0, 0.0).plus == doctest::Approx(zero.plus - 2.22e6).epsilon(1e-15));
    CHECK(transition_frequencies(sys, 0.0, 1e-4).unresolved_regime);
    CHECK_THROWS_AS((void)transition_frequencies(sys, -1.0, 0.0), ValidationError);
}

TEST_CASE("Zeeman symmetry and quadratic Stark law") {
    const RydbergSystem sys;
    for (double e : {0.0, 3.0, 25.0}) {
        const auto ref = transition_frequencies(sys, e, 3e-4);
        for (double b : {4e-4, 7.2e-4, 1.5e-3}) {
            const auto t = transition_frequencies(sys, e, b);
            CHECK((t.plus - sys.field_free_frequency - sys.offset_plus) +
                      (t.minus - sys.field_free_frequency - sys.offset_minus) ==
                  doctest::Approx((ref.plus - sys.field_free_frequency - sys.offset_plus) +
                                  (ref.minus - sys.field_free_frequency - sys.offset_minus))
                      .epsilon(1e-9)
                      .scale(1e6));
        }
        CHECK(stark_shift(sys, 2 * e) == 4 * stark_shift(sys, e));
    }
}

TEST_CASE("double-Gaussian fit recovers synthetic parameters under noise") {
    const double sigma = 1.2e6;
    const double c1 = 20.5e9 + 4e6;
    const double c2 = 20.5e9 - 3e6;
    const auto line = two_gaussians(c1, c2, sigma, 1.0, 0.7, 0.01, 3);
    const auto fit = fit_spectrum(line);
    CHECK(fit.resolved);
    CHECK(std::abs(fit.center_high - c1) < 0.02 * sigma);
    CHECK(std::abs(fit.center_low - c2) < 0.02 * sigma);
    CHECK(std::abs(fit.width - sigma) < 0.02 * sigma);
    CHECK(fit.amplitude_high == doctest::Approx(1.0).epsilon(0.03));
    CHECK(fit.amplitude_low == doctest::Approx(0.7).epsilon(0.03));
    CHECK(fit.covariance.rows() == 6);
}

TEST_CASE("symmetric input gives equal amplitudes") {
    const auto fit = fit_spectrum(two_gaussians(20.5e9 + 5e6, 20.5e9 - 5e6, 1e6, 0.8, 0.8, 0.0, 0));
    CHECK(fit.resolved);
    CHECK(fit.amplitude_high == doctest::Approx(fit.amplitude_low).epsilon(1e-6));
    CHECK(fit.width == doctest::Approx(1e6).epsilon(1e-6));
}

TEST_CASE("single line falls back to one Gaussian") {
    const auto fit = fit_spectrum(two_gaussians(20.5e9 + 1e6, 20.5e9, 1e6, 0.5, 0.5, 0.0, 0));
    CHECK_FALSE(fit.resolved);
    CHECK(fit.center_high == fit.center_low);
}

TEST_CASE("weak magnetic field leaves the lines unresolved") {
    const RydbergSystem sys;
    const auto line = synthesize_spectrum(sys, uniform_e(0.0), request(1e-4, 1.1e-3));
    CHECK_FALSE(fit_spectrum(line).resolved);
    const auto strong = synthesize_spectrum(sys, uniform_e(0.0), request(7.2e-4, 1.1e-3));
    const auto f = fit_spectrum(strong);
    CHECK(f.resolved);
    CHECK(f.center_high - f.center_low == doctest::Approx(2 * kMuBOverH * 7.2e-4 - 2e6).epsilon(0.01));
}

TEST_CASE("uniform field gives the homogeneous width at the Stark-shifted lines") {
    const RydbergSystem sys;
    const auto line = synthesize_spectrum(sys, uniform_e(20.0), request(7.2e-4, 1.1e-3));
    const auto f = fit_spectrum(line);
    const auto t = transition_frequencies(sys, 20.0, 7.2e-4);
    CHECK(f.width == doctest::Approx(sys.homogeneous_width).epsilon(1e-3));
    CHECK(f.center_high == doctest::Approx(t.plus).epsilon(1e-9));
    CHECK(f.center_low == doctest::Approx(t.minus).epsilon(1e-9));
    CHECK(line.mean_stark_shift == doctest::Approx(stark_shift(sys, 20.0)));
}

TEST_CASE("vanishing cloud in an inhomogeneous field gives the homogeneous width") {
    const RydbergSystem sys;
    const auto wide = fit_spectrum(synthesize_spectrum(sys, gradient_e(30.0), request(7.2e-4, 1.5e-3)));
    const auto point = fit_spectrum(synthesize_spectrum(sys, gradient_e(30.0), request(7.2e-4, 1e-6)));
    CHECK(wide.width > 1.2 * sys.homogeneous_width);
    CHECK(point.width == doctest::Approx(sys.homogeneous_width).epsilon(0.05));
}

TEST_CASE("synthesis is deterministic for a fixed seed") {
    const RydbergSystem sys;
    const auto a = synthesize_spectrum(sys, gradient_e(30.0), request(7.2e-4, 1.1e-3));
    const auto b = synthesize_spectrum(sys, gradient_e(30.0), request(7.2e-4, 1.1e-3));
    CHECK(a.signal == b.signal);
    auto r = request(7.2e-4, 1.1e-3);
    r.seed = 8;
    CHECK(synthesize_spectrum(sys, gradient_e(30.0), r).signal != a.signal);
}

TEST_CASE("cloud outside the map is rejected") {
    const RydbergSystem sys;
    auto r = request(7.2e-4, 1.1e-3);
    r.cloud.offset = Vec3(1.5e-3, 0, 0);
    CHECK_THROWS_AS((void)synthesize_spectrum(sys, uniform_e(1.0), r), ValidationError);
}

TEST_CASE("magnetic inhomogeneity adds little width") {
    const RydbergSystem sys;
    GridSpec grid;
    grid.cells = {64, 32, 48};
    const auto b = solve_magnetostatic(CavityGeometry::reference(), grid, 1e-3, Vec3::UnitZ());
    auto r = request(0.0, 1.5e-3);
    r.magnetic_map = b.field;
    const auto with_map = fit_spectrum(synthesize_spectrum(sys, uniform_e(0.0), r));
    CHECK(with_map.resolved);
    const double added = std::sqrt(std::max(0.0, std::pow(with_map.width, 2) - std::pow(sys.homogeneous_width, 2)));
    CHECK(added <= 0.15e6);
}

TEST_CASE("broadening decomposition") {
    CHECK(broadening_analysis(1e6, 1e6, -5e6).field_width == 0.0);
    const auto b = broadening_analysis(2e6, 1e6, -5e6);
    CHECK(b.field_width == doctest::Approx(std::sqrt(3.0) * 1e6));
    CHECK(b.relative_inhomogeneity == doctest::Approx(std::sqrt(3.0) / 10.0));
    CHECK_THROWS_AS((void)broadening_analysis(0.5e6, 1e6, -5e6), ValidationError);
    CHECK_THROWS_AS((void)broadening_analysis(2e6, 1e6, 0.0), ValidationError);
}

TEST_CASE("coil calibration fit") {
    const RydbergSystem sys;
    const double k = 5.1e-4;  // T per A
    std::vector<CalibrationPoint> pts;
    for (double i : {0.6, 1.0, 1.4, 1.9}) {
        const auto t = transition_frequencies(sys, 5.0, k * i);
        pts.push_back({i, t.plus, t.minus, 1.0});
    }
    const auto c = linear_calibration_fit(sys, pts);
    CHECK(c.gauss_per_ampere == doctest::Approx(5.1).epsilon(1e-9));
    CHECK(c.intercept_plus == doctest::Approx(transition_frequencies(sys, 5.0, 0.0).plus).epsilon(1e-14));

    for (auto& p : pts) {
        p.nu_plus = 20.5e9;
        p.nu_minus = 20.5e9;
    }
    CHECK(linear_calibration_fit(sys, pts).gauss_per_ampere == doctest::Approx(0.0).scale(1.0));

    for (auto& p : pts) p.current = 1.0;
    CHECK_THROWS_AS((void)linear_calibration_fit(sys, pts), ValidationError);
    pts.resize(2);
    CHECK_THROWS_AS((void)linear_calibration_fit(sys, pts), ValidationError);
}

TEST_CASE("spectrum CSV roundtrip") {
    const auto line = two_gaussians(20.5e9 + 5e6, 20.5e9 - 5e6, 1e6, 0.8, 0.6, 0.0, 0);
    const auto path = std::filesystem::temp_directory_path() / "biascav_spectrum_test.csv";
    write_spectrum_csv(path, line);
    const auto back = read_spectrum_csv(path);
    std::filesystem::remove(path);
    CHECK(back.frequency == line.frequency);
    CHECK(back.signal == line.signal);
}

TEST_CASE("doublet fit with a known splitting recovers overlapping lines") {
    const double sigma = 6e6;
    const double c1 = 20.5e9 + 4e6;
    const double c2 = 20.5e9 - 4e6;
    auto line = two_gaussians(c1, c2, sigma, 1.0, 0.9, 0.005, 4);
    CHECK_FALSE(fit_spectrum(line).resolved);
    const auto fit = fit_zeeman_doublet(line, c1 - c2);
    CHECK_FALSE(fit.resolved);
    CHECK(std::abs(fit.width - sigma) < 0.02 * sigma);
    CHECK(std::abs(fit.center_high - c1) < 0.02 * sigma);
    CHECK(fit.center_high - fit.center_low == doctest::Approx(c1 - c2));
    CHECK_THROWS_AS((void)fit_zeeman_doublet(line, 0.0), ValidationError);
}
