#include <algorithm>
#include <cmath>

#include <Eigen/SparseLU>

#include "doctest.h"

#include "biascav/error.hpp"
#include "biascav/fieldsolve.hpp"

using namespace biascav;

namespace {

// Puts nodes on both electrode axes.
GridSpec coarse() {
    GridSpec g;
    g.cells = {48, 16, 24};
    g.tolerance = 1e-9;
    return g;
}

// Direct sparse solve of the flux-port magnetostatic problem, assembled here from
// the continuum statement: Laplace inside, zero normal derivative on solid walls (ghost
// mirror), exterior potential on aperture nodes.
std::vector<double> direct_magnetostatic(const CavityGeometry& g, const GridSpec& grid, double b) {
    const GridShape s{grid.cells[0] + 1, grid.cells[1] + 1, grid.cells[2] + 1};
    const Vec3 h(g.lx / grid.cells[0], g.ly / grid.cells[1], g.lz / grid.cells[2]);
    const std::array<int, 3> n{s.nx, s.ny, s.nz};
    std::vector<double> fixed_value(s.size(), 0.0);
    std::vector<char> fixed(s.size(), 0);
    for (int i = 0; i < s.nx; ++i)
        for (int j = 0; j < s.ny; ++j)
            for (int k : {0, s.nz - 1}) {
                const Vec3 p(i * h.x(), j * h.y(), k * h.z());
                for (const auto& hole : g.holes) {
                    const double wall_z = k == 0 ? 0.0 : g.lz;
                    if (std::abs(hole.center.z() - wall_z) > 1e-12) continue;
                    if (std::hypot(p.x() - hole.center.x(), p.y() - hole.center.y()) <= hole.radius) {
                        fixed[s.index(i, j, k)] = 1;
                        fixed_value[s.index(i, j, k)] = -b * (p.z() - g.lz / 2);
                    }
                }
            }
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(Eigen::Index(s.size()));
    for (int i = 0; i < s.nx; ++i)
        for (int j = 0; j < s.ny; ++j)
            for (int k = 0; k < s.nz; ++k) {
                const auto id = Eigen::Index(s.index(i, j, k));
                if (fixed[std::size_t(id)]) {
                    trip.emplace_back(id, id, 1.0);
                    rhs[id] = fixed_value[std::size_t(id)];
                    continue;
                }
                const std::array<int, 3> idx{i, j, k};
                double diag = 0.0;
                for (int a = 0; a < 3; ++a) {
                    const double c = 1.0 / (h[a] * h[a]);
                    diag += 2.0 * c;
                    for (int sgn : {-1, 1}) {
                        auto nb = idx;
                        nb[a] += sgn;
                        if (nb[a] < 0 || nb[a] >= n[a]) nb[a] -= 2 * sgn;  // mirror ghost
                        trip.emplace_back(id, Eigen::Index(s.index(nb[0], nb[1], nb[2])), -c);
                    }
                }
                trip.emplace_back(id, id, diag);
            }
    Eigen::SparseMatrix<double> a(Eigen::Index(s.size()), Eigen::Index(s.size()));
    a.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(a);
    REQUIRE(lu.info() == Eigen::Success);
    const Eigen::VectorXd x = lu.solve(rhs);
    return {x.data(), x.data() + x.size()};
}

}  // namespace

TEST_CASE("electrostatic potential obeys the maximum principle") {
    const auto sol = solve_electrostatic(CavityGeometry::reference(), coarse(), -0.7, 1.3);
    const auto [lo, hi] = std::minmax_element(sol.potential.begin(), sol.potential.end());
    CHECK(*lo >= -0.7 - 1e-12);
    CHECK(*hi <= 1.3 + 1e-12);
}

TEST_CASE("electrostatic solve is linear in the electrode voltages") {
    const auto g = CavityGeometry::reference();
    const auto grid = coarse();
    const auto a = solve_electrostatic(g, grid, 0.0, 1.0);
    const auto b = solve_electrostatic(g, grid, 0.0, 2.5);
    for (std::size_t i = 0; i < a.potential.size(); i += 97) {
        CHECK(b.potential[i] == doctest::Approx(2.5 * a.potential[i]).epsilon(1e-12));
    }
    const auto c = solve_electrostatic(g, grid, 1.0, 0.0);
    const auto d = solve_electrostatic(g, grid, 1.0, 1.0);
    for (std::size_t i = 0; i < a.potential.size(); i += 97) {
        CHECK(d.potential[i] == doctest::Approx(a.potential[i] + c.potential[i]).epsilon(1e-6));
    }
}

TEST_CASE("antisymmetric drive gives an antisymmetric potential") {
    const auto g = CavityGeometry::reference();
    const auto grid = coarse();
    const auto sol = solve_electrostatic(g, grid, -1.0, 1.0);
    const auto& s = sol.field.shape();
    for (int i = 0; i < s.nx; i += 3) {
        const double left = sol.potential[s.index(i, s.ny / 2, s.nz / 3)];
        const double right = sol.potential[s.index(s.nx - 1 - i, s.ny / 2, s.nz / 3)];
        CHECK(left == doctest::Approx(-right).epsilon(1e-6).scale(1.0));
    }
}

TEST_CASE("zero voltages give an identically zero field without iterating") {
    const auto sol = solve_electrostatic(CavityGeometry::reference(), coarse(), 0.0, 0.0);
    CHECK(sol.iterations == 0);
    for (const auto& v : sol.field.values()) CHECK(v.norm() == 0.0);
}

TEST_CASE("discrete Gauss law holds in charge-free boxes") {
    const auto sol = solve_electrostatic(CavityGeometry::reference(), coarse(), -1.0, 1.0);
    const auto fb = flux_balance(sol, {18, 2, 4}, {30, 14, 20});
    CHECK(fb.gross > 0.0);
    CHECK(std::abs(fb.net) < 1e-6 * fb.gross);
    CHECK_THROWS_AS((void)flux_balance(sol, {0, 2, 4}, {30, 14, 20}), ValidationError);
}

TEST_CASE("sub-cell electrode treatment converges under refinement") {
    const auto g = CavityGeometry::reference();
    GridSpec a;
    a.cells = {64, 32, 48};
    GridSpec b;
    b.cells = {128, 64, 96};
    const auto ea = solve_electrostatic(g, a, -1.0, 1.0);
    const auto eb = solve_electrostatic(g, b, -1.0, 1.0);
    const double ca = ea.field.sample(ea.field.center()).norm();
    const double cb = eb.field.sample(eb.field.center()).norm();
    CHECK(std::abs(ca / cb - 1.0) < 0.02);
}

TEST_CASE("magnetostatic relaxation matches a direct sparse solve") {
    const auto g = CavityGeometry::reference();
    auto grid = coarse();
    grid.cells = {32, 16, 24};
    const double b = 1e-3;
    const auto sol = solve_magnetostatic(g, grid, b, Vec3::UnitZ());
    const auto direct = direct_magnetostatic(g, grid, b);
    double worst = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < direct.size(); ++i) {
        worst = std::max(worst, std::abs(direct[i] - sol.potential[i]));
        scale = std::max(scale, std::abs(direct[i]));
    }
    CHECK(worst < 1e-6 * scale);
}

TEST_CASE("magnetostatic field is reduced but finite at the centre and symmetric in z") {
    const auto g = CavityGeometry::reference();
    const auto sol = solve_magnetostatic(g, coarse(), 1e-3, Vec3::UnitZ());
    const auto& s = sol.field.shape();
    const Vec3 c = sol.field.sample(sol.field.center());
    CHECK(c.z() > 0.0);
    CHECK(c.z() < 1e-3);
    CHECK(std::abs(sol.potential[s.index(s.nx / 2, s.ny / 2, s.nz / 2)]) < 1e-9);
    // Flux-blocking side walls: normal component vanishes there.
    CHECK(sol.field.at(0, s.ny / 2, s.nz / 2).x() == 0.0);
}

TEST_CASE("invalid solver inputs are rejected") {
    const auto g = CavityGeometry::reference();
    GridSpec tiny;
    tiny.cells = {8, 8, 8};
    CHECK_THROWS_AS((void)solve_electrostatic(g, tiny, 0.0, 1.0), ValidationError);

    auto thin = g;
    thin.electrodes[0].radius = 1e-5;
    CHECK_THROWS_AS((void)solve_electrostatic(thin, GridSpec{}, 0.0, 1.0), ValidationError);

    auto bare = g;
    bare.holes.clear();
    CHECK_THROWS_AS((void)solve_magnetostatic(bare, coarse(), 1e-3, Vec3::UnitZ()), ValidationError);
    auto closed = g;
    closed.holes[0].radius = 0.0;
    CHECK_THROWS_AS((void)solve_magnetostatic(closed, coarse(), 1e-3, Vec3::UnitZ()), ValidationError);
    CHECK_THROWS_AS((void)solve_magnetostatic(g, coarse(), 1e-3, Vec3::UnitX()), ValidationError);

    GridSpec few = coarse();
    few.max_iterations = 5;
    try {
        (void)solve_electrostatic(g, few, -1.0, 1.0);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.residual() > few.tolerance);
        CHECK(e.iterations() == 5);
    }
}

TEST_CASE("field statistics on a uniform map") {
    const auto m = FieldMap::uniform(FieldKind::Electric, {21, 21, 21}, Vec3::Constant(1e-4),
                                     Vec3::Zero(), Vec3(0, 5.0, 0));
    const auto st = field_statistics(m, Region::centered(m.center(), Vec3::Constant(1e-3)), Cloud{Vec3::Zero(), 0.5e-3});
    CHECK(st.center_value == doctest::Approx(5.0));
    CHECK(st.mean_abs_deviation == doctest::Approx(0.0));
    CHECK(st.cloud_mean == doctest::Approx(5.0));
    CHECK(st.cloud_std == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(st.region_nodes == 11 * 11 * 11);
    CHECK_THROWS_AS((void)cloud_moments(m, Cloud{Vec3::Zero(), 1.5e-3}), ValidationError);
}

TEST_CASE("cloud moments of a linear magnitude equal the value at the cloud centre") {
    // |F| = 1 + 100 x over a symmetric truncated Gaussian: mean is |F| at the centre and
    // std is 100 * sigma * sqrt(truncated variance factor).
    const GridShape s{41, 41, 41};
    const Vec3 h = Vec3::Constant(1e-4);
    std::vector<Vec3> v(s.size());
    for (int i = 0; i < s.nx; ++i)
        for (int j = 0; j < s.ny; ++j)
            for (int k = 0; k < s.nz; ++k) v[s.index(i, j, k)] = Vec3(1.0 + 100.0 * i * h.x(), 0, 0);
    const FieldMap m(FieldKind::Electric, s, h, Vec3::Zero(), v);
    const Cloud cloud{Vec3(2e-4, 0, 0), 1e-3};
    const auto mo = cloud_moments(m, cloud, 65);
    CHECK(mo.mean == doctest::Approx(1.0 + 100.0 * (2e-3 + 2e-4)).epsilon(1e-9));
    // Variance of a standard normal truncated to [-4, 4].
    const double phi4 = std::exp(-8.0) / std::sqrt(2.0 * M_PI);
    const double trunc = 1.0 - 2.0 * 4.0 * phi4 / std::erf(4.0 / std::sqrt(2.0));
    CHECK(mo.std == doctest::Approx(100.0 * cloud.sigma() * std::sqrt(trunc)).epsilon(2e-3));
}
