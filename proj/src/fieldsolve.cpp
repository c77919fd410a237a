#include "biascav/fieldsolve.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <limits>
#include <sstream>

#include "biascav/constants.hpp"
#include "biascav/error.hpp"

namespace biascav {

void GridSpec::validate() const {
    for (int c : cells) {
        if (c < 16) throw ValidationError("grid resolution must be at least 16 cells per axis");
    }
    if (!(tolerance > 0.0 && tolerance <= 1e-3)) {
        throw ValidationError("solver tolerance must lie in (0, 1e-3]");
    }
    if (max_iterations < 1) throw ValidationError("max_iterations must be positive");
    if (relaxation != 0.0 && !(relaxation > 0.0 && relaxation < 2.0)) {
        throw ValidationError("relaxation factor must lie in (0, 2)");
    }
}

namespace {

// Neighbour slots: -x, +x, -y, +y, -z, +z.
using Weights = std::array<double, 6>;

struct LinearProblem {
    GridShape shape;
    Vec3 h;
    std::vector<double> value;
    std::vector<char> fixed;
    std::vector<Weights> weight;
    std::vector<double> diag;
    std::vector<double> rhs;
    double scale = 0.0;

    LinearProblem(GridShape s, Vec3 spacing)
        : shape(s),
          h(std::move(spacing)),
          value(s.size(), 0.0),
          fixed(s.size(), 0),
          weight(s.size(), Weights{}),
          diag(s.size(), 1.0),
          rhs(s.size(), 0.0) {}

    [[nodiscard]] Vec3 position(int i, int j, int k) const {
        return Vec3(i * h.x(), j * h.y(), k * h.z());
    }
};

GridShape nodes_of(const GridSpec& grid) {
    return GridShape{grid.cells[0] + 1, grid.cells[1] + 1, grid.cells[2] + 1};
}

Vec3 spacing_of(const CavityGeometry& g, const GridSpec& grid) {
    return Vec3(g.lx / grid.cells[0], g.ly / grid.cells[1], g.lz / grid.cells[2]);
}

double relaxation_factor(const GridSpec& grid, const Vec3& h) {
    if (grid.relaxation > 0.0) return grid.relaxation;
    double num = 0.0;
    double den = 0.0;
    for (int a = 0; a < 3; ++a) {
        const double w = 1.0 / (h[a] * h[a]);
        num += w * std::cos(constants::pi / grid.cells[a]);
        den += w;
    }
    const double rho = num / den;
    return 2.0 / (1.0 + std::sqrt(1.0 - rho * rho));
}

struct RelaxStats {
    long iterations = 0;
    double residual = 0.0;
};

// Red-black SOR on the assembled stencil. The residual is the largest Jacobi correction
// |(b - A x)_i / A_ii| relative to the largest Dirichlet magnitude.
RelaxStats relax(LinearProblem& p, const GridSpec& grid, const char* what) {
    const auto& s = p.shape;
    if (p.scale == 0.0) {
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            if (!p.fixed[i]) p.value[i] = 0.0;
        }
        return {};
    }
    const double omega = relaxation_factor(grid, p.h);
    const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(s.ny) * s.nz;
    const std::ptrdiff_t sy = s.nz;
    const std::array<std::ptrdiff_t, 6> offset{-sx, sx, -sy, sy, -1, 1};
    double* v = p.value.data();

    auto local_target = [&](std::size_t id) {
        const Weights& w = p.weight[id];
        double acc = p.rhs[id];
        for (int n = 0; n < 6; ++n) {
            if (w[n] != 0.0) acc += w[n] * v[static_cast<std::ptrdiff_t>(id) + offset[n]];
        }
        return acc / p.diag[id];
    };

    auto residual = [&] {
        double r = 0.0;
        for (std::size_t id = 0; id < p.value.size(); ++id) {
            if (!p.fixed[id]) r = std::max(r, std::abs(local_target(id) - v[id]));
        }
        return r / p.scale;
    };

    constexpr long kCheckEvery = 10;
    double r = std::numeric_limits<double>::infinity();
    for (long it = 1; it <= grid.max_iterations; ++it) {
        for (int color = 0; color < 2; ++color) {
            for (int i = 0; i < s.nx; ++i) {
                for (int j = 0; j < s.ny; ++j) {
                    const int k0 = (color + i + j) & 1;
                    std::size_t id = s.index(i, j, k0);
                    for (int k = k0; k < s.nz; k += 2, id += 2) {
                        if (p.fixed[id]) continue;
                        v[id] += omega * (local_target(id) - v[id]);
                    }
                }
            }
        }
        if (it % kCheckEvery == 0 || it == grid.max_iterations) {
            r = residual();
            if (r <= grid.tolerance) return {it, r};
        }
    }
    throw ConvergenceError(std::string(what) + " did not converge", r, grid.max_iterations);
}

// -grad(potential). Along an axis, boundary nodes use one-sided differences unless they
// are free Neumann nodes, whose mirrored ghost makes the normal derivative vanish.
std::vector<Vec3> negative_gradient(const LinearProblem& p, bool neumann_walls) {
    const auto& s = p.shape;
    const std::array<int, 3> n{s.nx, s.ny, s.nz};
    const std::array<std::size_t, 3> stride{static_cast<std::size_t>(s.ny) * s.nz,
                                            static_cast<std::size_t>(s.nz), 1};
    std::vector<Vec3> out(s.size(), Vec3::Zero());
    for (int i = 0; i < s.nx; ++i) {
        for (int j = 0; j < s.ny; ++j) {
            for (int k = 0; k < s.nz; ++k) {
                const std::size_t id = s.index(i, j, k);
                const std::array<int, 3> idx{i, j, k};
                Vec3 g;
                for (int a = 0; a < 3; ++a) {
                    const int c = idx[a];
                    const double h = p.h[a];
                    if (c == 0 || c == n[a] - 1) {
                        if (neumann_walls && !p.fixed[id]) {
                            g[a] = 0.0;
                        } else if (c == 0) {
                            g[a] = (p.value[id + stride[a]] - p.value[id]) / h;
                        } else {
                            g[a] = (p.value[id] - p.value[id - stride[a]]) / h;
                        }
                    } else {
                        g[a] = (p.value[id + stride[a]] - p.value[id - stride[a]]) / (2.0 * h);
                    }
                }
                out[id] = -g;
            }
        }
    }
    return out;
}

// Distance along +/- axis `a` from p to where it enters electrode `e`, if within `reach`.
std::optional<double> surface_crossing(const Electrode& e, const Vec3& p, int a, int sign,
                                       double reach) {
    const int ax = index_of(e.axis);
    if (ax == a) return std::nullopt;
    const int other = 3 - ax - a;
    const double d = p[other] - e.anchor[other];
    if (std::abs(d) >= e.radius) return std::nullopt;
    const double half_chord = std::sqrt(e.radius * e.radius - d * d);
    const double t = sign > 0 ? (e.anchor[a] - half_chord) - p[a]
                              : p[a] - (e.anchor[a] + half_chord);
    if (t > 0.0 && t <= reach) return t;
    return std::nullopt;
}

FieldSolution finish(LinearProblem& p, FieldKind kind, bool neumann_walls, RelaxStats stats) {
    auto values = negative_gradient(p, neumann_walls);
    FieldMap map(kind, p.shape, p.h, Vec3::Zero(), std::move(values));
    return FieldSolution{std::move(map), std::move(p.value), std::move(p.fixed), stats.iterations,
                         stats.residual};
}

}  // namespace

FieldSolution solve_electrostatic(const CavityGeometry& geometry, const GridSpec& grid) {
    geometry.validate();
    grid.validate();
    if (geometry.electrodes.empty()) {
        throw ValidationError("electrostatic solve needs at least one electrode");
    }

    LinearProblem p(nodes_of(grid), spacing_of(geometry, grid));
    const auto& s = p.shape;
    const double hmin = p.h.minCoeff();
    // Nodes within 1% of a cell of the surface are clamped to keep the stencil bounded.
    const double snap = 0.01 * hmin;

    std::vector<std::vector<char>> layer_hit(geometry.electrodes.size());
    for (std::size_t e = 0; e < geometry.electrodes.size(); ++e) {
        const int ax = index_of(geometry.electrodes[e].axis);
        layer_hit[e].assign(static_cast<std::size_t>(grid.cells[ax] + 1), 0);
    }

    for (int i = 0; i < s.nx; ++i) {
        for (int j = 0; j < s.ny; ++j) {
            for (int k = 0; k < s.nz; ++k) {
                const std::size_t id = s.index(i, j, k);
                if (i == 0 || j == 0 || k == 0 || i == s.nx - 1 || j == s.ny - 1 || k == s.nz - 1) {
                    p.fixed[id] = 1;
                    p.value[id] = 0.0;
                    continue;
                }
                const Vec3 x = p.position(i, j, k);
                for (std::size_t e = 0; e < geometry.electrodes.size(); ++e) {
                    const auto& el = geometry.electrodes[e];
                    if (el.distance_to_axis(x) <= el.radius + snap) {
                        p.fixed[id] = 1;
                        p.value[id] = el.potential;
                        const std::array<int, 3> idx{i, j, k};
                        layer_hit[e][static_cast<std::size_t>(idx[index_of(el.axis)])] = 1;
                        break;
                    }
                }
            }
        }
    }
    for (std::size_t e = 0; e < geometry.electrodes.size(); ++e) {
        const auto& hits = layer_hit[e];
        // Interior layers only; the end layers sit on the walls.
        if (std::find(hits.begin() + 1, hits.end() - 1, 0) != hits.end() - 1) {
            std::ostringstream os;
            os << "electrode " << e + 1 << " (radius " << geometry.electrodes[e].radius
               << " m) is not resolved by the grid; increase the resolution";
            throw ValidationError(os.str());
        }
    }

    for (int i = 1; i < s.nx - 1; ++i) {
        for (int j = 1; j < s.ny - 1; ++j) {
            for (int k = 1; k < s.nz - 1; ++k) {
                const std::size_t id = s.index(i, j, k);
                if (p.fixed[id]) continue;
                const Vec3 x = p.position(i, j, k);
                const std::array<int, 3> idx{i, j, k};
                Weights w{};
                double diag = 0.0;
                double rhs = 0.0;
                for (int a = 0; a < 3; ++a) {
                    const double h = p.h[a];
                    std::array<double, 2> dist{h, h};
                    std::array<bool, 2> boundary{false, false};
                    std::array<double, 2> bvalue{0.0, 0.0};
                    for (int side = 0; side < 2; ++side) {
                        const int sign = side == 0 ? -1 : 1;
                        double best = std::numeric_limits<double>::infinity();
                        for (const auto& el : geometry.electrodes) {
                            if (auto t = surface_crossing(el, x, a, sign, h); t && *t < best) {
                                best = *t;
                                bvalue[side] = el.potential;
                            }
                        }
                        if (best <= h) {
                            dist[side] = best;
                            boundary[side] = true;
                            continue;
                        }
                        std::array<int, 3> nb = idx;
                        nb[a] += sign;
                        const std::size_t nid = s.index(nb[0], nb[1], nb[2]);
                        if (p.fixed[nid]) {
                            boundary[side] = true;
                            bvalue[side] = p.value[nid];
                        }
                    }
                    // Shortley-Weller: second difference on an irregular three-point star.
                    const double sum = dist[0] + dist[1];
                    const std::array<double, 2> coef{2.0 / (dist[0] * sum), 2.0 / (dist[1] * sum)};
                    for (int side = 0; side < 2; ++side) {
                        diag += coef[side];
                        if (boundary[side]) {
                            rhs += coef[side] * bvalue[side];
                        } else {
                            w[2 * a + side] = coef[side];
                        }
                    }
                }
                p.weight[id] = w;
                p.diag[id] = diag;
                p.rhs[id] = rhs;
            }
        }
    }

    for (std::size_t id = 0; id < p.value.size(); ++id) {
        if (p.fixed[id]) p.scale = std::max(p.scale, std::abs(p.value[id]));
    }
    const auto stats = relax(p, grid, "electrostatic relaxation");
    return finish(p, FieldKind::Electric, false, stats);
}

FieldSolution solve_electrostatic(const CavityGeometry& geometry, const GridSpec& grid, double v1,
                                  double v2) {
    if (geometry.electrodes.size() != 2) {
        throw ValidationError("solve_electrostatic(v1, v2) needs exactly two electrodes");
    }
    CavityGeometry g = geometry;
    g.electrodes[0].potential = v1;
    g.electrodes[1].potential = v2;
    return solve_electrostatic(g, grid);
}

FieldSolution solve_magnetostatic(const CavityGeometry& geometry, const GridSpec& grid,
                                  double b_ext, const Vec3& direction) {
    geometry.validate();
    grid.validate();
    if (!std::isfinite(b_ext)) throw ValidationError("external field must be finite");
    if (geometry.holes.empty()) {
        throw ValidationError("magnetostatic solve needs access holes to admit flux");
    }
    const double dnorm = direction.norm();
    if (!(dnorm > 0.0) || !direction.allFinite()) {
        throw ValidationError("field direction must be a non-zero vector");
    }
    const Vec3 dir = direction / dnorm;

    struct Port {
        WallLocation wall;
        Vec3 center;
        double radius;
    };
    std::vector<Port> ports;
    for (std::size_t i = 0; i < geometry.holes.size(); ++i) {
        const auto& h = geometry.holes[i];
        if (!(h.radius > 0.0)) {
            throw ValidationError("access hole " + std::to_string(i + 1) + " has zero radius");
        }
        const auto wall = geometry.wall_of(h.center);
        if (std::abs(dir[index_of(wall->normal)]) < 1.0 - 1e-9) {
            throw ValidationError("field direction must lie along the access-hole axis (" +
                                  to_string(wall->normal) + ")");
        }
        ports.push_back(Port{*wall, h.center, h.radius});
    }

    LinearProblem p(nodes_of(grid), spacing_of(geometry, grid));
    const auto& s = p.shape;
    const std::array<int, 3> n{s.nx, s.ny, s.nz};
    const Vec3 center = geometry.center();

    std::vector<int> port_nodes(ports.size(), 0);
    for (int i = 0; i < s.nx; ++i) {
        for (int j = 0; j < s.ny; ++j) {
            for (int k = 0; k < s.nz; ++k) {
                const std::array<int, 3> idx{i, j, k};
                const Vec3 x = p.position(i, j, k);
                for (std::size_t q = 0; q < ports.size(); ++q) {
                    const auto& port = ports[q];
                    const int a = index_of(port.wall.normal);
                    if (idx[a] != (port.wall.far_side ? n[a] - 1 : 0)) continue;
                    Vec3 d = x - port.center;
                    d[a] = 0.0;
                    if (d.norm() <= port.radius) {
                        const std::size_t id = s.index(i, j, k);
                        p.fixed[id] = 1;
                        p.value[id] = -b_ext * dir.dot(x - center);
                        ++port_nodes[q];
                        break;
                    }
                }
            }
        }
    }
    for (std::size_t q = 0; q < ports.size(); ++q) {
        if (port_nodes[q] == 0) {
            throw ValidationError("access hole " + std::to_string(q + 1) +
                                  " is not resolved by the grid");
        }
    }

    for (int i = 0; i < s.nx; ++i) {
        for (int j = 0; j < s.ny; ++j) {
            for (int k = 0; k < s.nz; ++k) {
                const std::size_t id = s.index(i, j, k);
                if (p.fixed[id]) continue;
                const std::array<int, 3> idx{i, j, k};
                Weights w{};
                double diag = 0.0;
                double rhs = 0.0;
                for (int a = 0; a < 3; ++a) {
                    const double c = 1.0 / (p.h[a] * p.h[a]);
                    diag += 2.0 * c;
                    std::array<double, 2> coef{c, c};
                    // Mirror ghost node across a flux-blocking wall.
                    if (idx[a] == 0) coef = {0.0, 2.0 * c};
                    if (idx[a] == n[a] - 1) coef = {2.0 * c, 0.0};
                    for (int side = 0; side < 2; ++side) {
                        if (coef[side] == 0.0) continue;
                        std::array<int, 3> nb = idx;
                        nb[a] += side == 0 ? -1 : 1;
                        const std::size_t nid = s.index(nb[0], nb[1], nb[2]);
                        if (p.fixed[nid]) {
                            rhs += coef[side] * p.value[nid];
                        } else {
                            w[2 * a + side] = coef[side];
                        }
                    }
                }
                p.weight[id] = w;
                p.diag[id] = diag;
                p.rhs[id] = rhs;
            }
        }
    }

    for (std::size_t id = 0; id < p.value.size(); ++id) {
        if (p.fixed[id]) p.scale = std::max(p.scale, std::abs(p.value[id]));
    }
    const auto stats = relax(p, grid, "magnetostatic relaxation");
    return finish(p, FieldKind::Magnetic, true, stats);
}

CloudMoments cloud_moments(const FieldMap& map, const Cloud& cloud, int points_per_axis) {
    if (!(cloud.diameter >= 0.0) || !std::isfinite(cloud.diameter)) {
        throw ValidationError("cloud diameter must be non-negative");
    }
    if (points_per_axis < 3) throw ValidationError("cloud quadrature needs >= 3 points per axis");
    const Vec3 c = map.center() + cloud.offset;
    if (cloud.diameter == 0.0) return CloudMoments{map.sample(c).norm(), 0.0};

    const double half = cloud.support();
    for (int a = 0; a < 3; ++a) {
        const Vec3 lo = map.origin();
        const Vec3 hi = map.upper();
        if (c[a] - half < lo[a] - 1e-12 || c[a] + half > hi[a] + 1e-12) {
            throw ValidationError("cloud extends outside the field map");
        }
    }
    const double sigma = cloud.sigma();
    const double step = 2.0 * half / (points_per_axis - 1);
    double wsum = 0.0;
    double m1 = 0.0;
    double m2 = 0.0;
    for (int i = 0; i < points_per_axis; ++i) {
        for (int j = 0; j < points_per_axis; ++j) {
            for (int k = 0; k < points_per_axis; ++k) {
                const Vec3 d(-half + i * step, -half + j * step, -half + k * step);
                const double w = std::exp(-d.squaredNorm() / (2.0 * sigma * sigma));
                const double f = map.sample(c + d).norm();
                wsum += w;
                m1 += w * f;
                m2 += w * f * f;
            }
        }
    }
    const double mean = m1 / wsum;
    const double var = std::max(0.0, m2 / wsum - mean * mean);
    return CloudMoments{mean, std::sqrt(var)};
}

FieldStats field_statistics(const FieldMap& map, const Region& region, const Cloud& cloud) {
    if (!(region.upper.array() >= region.lower.array()).all()) {
        throw ValidationError("statistics region has negative extent");
    }
    if (!map.contains(region.lower) || !map.contains(region.upper)) {
        throw ValidationError("statistics region extends outside the field map");
    }
    FieldStats st;
    st.center_value = map.sample(map.center()).norm();
    if (!(st.center_value > 0.0)) {
        throw ValidationError("field vanishes at the map centre; relative deviation is undefined");
    }

    const auto& s = map.shape();
    st.relative_deviation.resize(s.size());
    double sum = 0.0;
    for (int i = 0; i < s.nx; ++i) {
        for (int j = 0; j < s.ny; ++j) {
            for (int k = 0; k < s.nz; ++k) {
                const std::size_t id = s.index(i, j, k);
                const double dev = map.values()[id].norm() / st.center_value - 1.0;
                st.relative_deviation[id] = dev;
                const Vec3 x = map.position(i, j, k);
                const double tol = 1e-9 * map.spacing().minCoeff();
                if ((x.array() >= region.lower.array() - tol).all() &&
                    (x.array() <= region.upper.array() + tol).all()) {
                    ++st.region_nodes;
                    sum += std::abs(dev);
                    st.max_abs_deviation = std::max(st.max_abs_deviation, std::abs(dev));
                }
            }
        }
    }
    if (st.region_nodes == 0) throw ValidationError("statistics region contains no grid nodes");
    st.mean_abs_deviation = sum / static_cast<double>(st.region_nodes);

    const auto moments = cloud_moments(map, cloud);
    st.cloud_mean = moments.mean;
    st.cloud_std = moments.std;
    return st;
}

FluxBalance flux_balance(const FieldSolution& solution, const std::array<int, 3>& lo,
                         const std::array<int, 3>& hi) {
    const auto& s = solution.field.shape();
    const std::array<int, 3> n{s.nx, s.ny, s.nz};
    const Vec3& h = solution.field.spacing();
    for (int a = 0; a < 3; ++a) {
        if (lo[a] < 1 || hi[a] > n[a] - 2 || lo[a] > hi[a]) {
            throw ValidationError("flux box must lie strictly inside the grid");
        }
    }
    for (int i = lo[0]; i <= hi[0]; ++i) {
        for (int j = lo[1]; j <= hi[1]; ++j) {
            for (int k = lo[2]; k <= hi[2]; ++k) {
                if (solution.fixed[s.index(i, j, k)]) {
                    throw ValidationError("flux box encloses Dirichlet nodes");
                }
            }
        }
    }
    const auto& phi = solution.potential;
    FluxBalance fb;
    for (int a = 0; a < 3; ++a) {
        const int u = (a + 1) % 3;
        const int v = (a + 2) % 3;
        const double area = h[u] * h[v];
        for (int side = 0; side < 2; ++side) {
            const int inner = side == 0 ? lo[a] : hi[a];
            const int outer = side == 0 ? lo[a] - 1 : hi[a] + 1;
            for (int p = lo[u]; p <= hi[u]; ++p) {
                for (int q = lo[v]; q <= hi[v]; ++q) {
                    std::array<int, 3> in{}, out{};
                    in[a] = inner;
                    out[a] = outer;
                    in[u] = out[u] = p;
                    in[v] = out[v] = q;
                    const double d = phi[s.index(out[0], out[1], out[2])] -
                                     phi[s.index(in[0], in[1], in[2])];
                    const double flux = -d / h[a] * area;
                    fb.net += flux;
                    fb.gross += std::abs(flux);
                }
            }
        }
    }
    return fb;
}

}  // namespace biascav
