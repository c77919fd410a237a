#include <cmath>

#include "doctest.h"

#include "biascav/error.hpp"
#include "biascav/tuning.hpp"

using namespace biascav;

namespace {

const ModeIndex kTe301{3, 0, 1};

RodInsertion sapphire(double depth) {
    RodInsertion r;
    r.material = RodMaterial::Dielectric;
    r.permittivity = 9.0;
    r.diameter = 1.9e-3;
    r.depth = depth;
    return r;
}

RodInsertion niobium(double depth) {
    RodInsertion r;
    r.material = RodMaterial::Conductor;
    r.diameter = 1.9e-3;
    r.depth = depth;
    return r;
}

}  // namespace

TEST_CASE("a vacuum rod or zero depth does not shift the mode") {
    const auto g = CavityGeometry::reference();
    auto r = sapphire(4.2e-3);
    r.permittivity = 1.0;
    CHECK(perturbation_shift(g, kTe301, r).shift == 0.0);
    CHECK(perturbation_shift(g, kTe301, sapphire(0.0)).shift == 0.0);
}

TEST_CASE("dielectric pulls the frequency down and conductor pushes it up") {
    const auto g = CavityGeometry::reference();
    const auto s = perturbation_shift(g, kTe301, sapphire(4.2e-3));
    CHECK(s.shift < 0.0);
    CHECK(std::abs(s.shift) > 115e6);
    CHECK(std::abs(s.shift) < 460e6);
    const auto n = perturbation_shift(g, kTe301, niobium(1.55e-3));
    CHECK(n.shift > 0.0);
    CHECK(n.shift > 27e6);
    CHECK(n.shift < 108e6);
}

TEST_CASE("dielectric shift magnitude grows with depth") {
    const auto g = CavityGeometry::reference();
    std::vector<double> depths;
    for (int i = 1; i <= 12; ++i) depths.push_back(i * 1e-3);
    const auto curve = tuning_curve(g, kTe301, sapphire(0.0), depths);
    for (std::size_t i = 1; i < curve.size(); ++i) {
        CHECK(curve[i].shift <= curve[i - 1].shift);
    }
}

TEST_CASE("quasi-static local field scales the shift by 2/(eps+1)") {
    const auto g = CavityGeometry::reference();
    TuningOptions plain;
    plain.local_field = LocalField::Unperturbed;
    for (double eps : {2.0, 9.0, 40.0}) {
        auto r = sapphire(3e-3);
        r.permittivity = eps;
        const double qs = perturbation_shift(g, kTe301, r).shift;
        const double un = perturbation_shift(g, kTe301, r, plain).shift;
        CHECK(qs / un == doctest::Approx(2.0 / (eps + 1.0)).epsilon(1e-12));
    }
}

TEST_CASE("rod integral matches the Bessel-function closed form") {
    // E_y = sin(kx x) sin(kz z) with the rod axis at z = lz/2. Over the rod cross-section
    // sin^2(kz z) integrates to pi r^2 (1 + 2 J1(q r)/(q r)) / 2 with q = 2 kz; along the
    // rod sin^2(kx x) integrates to d/2 - sin(2 kx d)/(4 kx). Mode energy is V/2.
    const auto g = CavityGeometry::reference();
    const double kx = 3 * M_PI / g.lx;
    const double kz = M_PI / g.lz;
    TuningOptions fine;
    fine.local_field = LocalField::Unperturbed;
    fine.axial_samples = 256;
    fine.radial_samples = 64;
    fine.angular_samples = 128;
    for (double d : {1.0e-3, 4.2e-3, 9.0e-3}) {
        const auto r = sapphire(d);
        const double rad = r.diameter / 2;
        const double q = 2 * kz;
        const double disc = M_PI * rad * rad * (1 + 2 * std::cyl_bessel_j(1.0, q * rad) / (q * rad)) / 2;
        const double axial = d / 2 - std::sin(2 * kx * d) / (4 * kx);
        const double energy = g.lx * g.ly * g.lz / 2;
        const double expected = -(r.permittivity - 1) * disc * axial / energy;
        CHECK(perturbation_shift(g, kTe301, r, fine).relative == doctest::Approx(expected).epsilon(1e-4));
    }
}

TEST_CASE("large perturbations are flagged") {
    const auto g = CavityGeometry::reference();
    auto r = sapphire(g.lx);
    r.permittivity = 100.0;
    TuningOptions plain;
    plain.local_field = LocalField::Unperturbed;
    const auto s = perturbation_shift(g, kTe301, r, plain);
    CHECK(s.nonperturbative);
    CHECK(std::abs(s.relative) > 0.05);
    CHECK_FALSE(perturbation_shift(g, kTe301, sapphire(0.5e-3)).nonperturbative);
}

TEST_CASE("rod validation") {
    const auto g = CavityGeometry::reference();
    auto r = sapphire(1e-3);
    r.diameter = 3e-3;
    CHECK_THROWS_AS((void)perturbation_shift(g, kTe301, r), ValidationError);
    r = sapphire(2 * g.lx);
    CHECK_THROWS_AS((void)perturbation_shift(g, kTe301, r), ValidationError);
    r = sapphire(1e-3);
    r.permittivity = 0.5;
    CHECK_THROWS_AS((void)perturbation_shift(g, kTe301, r), ValidationError);
}

TEST_CASE("shift is first order in the susceptibility") {
    const auto g = CavityGeometry::reference();
    TuningOptions plain;
    plain.local_field = LocalField::Unperturbed;
    auto ref = sapphire(3e-3);
    ref.permittivity = 3.0;
    const double at3 = perturbation_shift(g, kTe301, ref, plain).shift;
    const double at3_qs = perturbation_shift(g, kTe301, ref).shift;
    for (double d : {0.01, 0.05, 0.1}) {
        auto r = sapphire(3e-3);
        r.permittivity = 1.0 + d;
        CHECK(perturbation_shift(g, kTe301, r, plain).shift / at3 == doctest::Approx(d / 2).epsilon(1e-12));
        // The depolarization factor is 1 for a weak dielectric and 1/2 at eps = 3.
        CHECK(perturbation_shift(g, kTe301, r).shift / at3_qs == doctest::Approx(d).epsilon(0.1));
    }
}

TEST_CASE("conductor shift is non-negative near the wall") {
    // Deeper in, the rod reaches the electric antinode and the shift turns negative.
    const auto g = CavityGeometry::reference();
    for (int i = 1; i <= 31; ++i) {
        CHECK(perturbation_shift(g, kTe301, niobium(i * 0.05e-3)).shift >= 0.0);
    }
    CHECK(perturbation_shift(g, kTe301, niobium(g.lx / 6)).shift < 0.0);
}
