#include "biascav/field_map.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "biascav/csv.hpp"
#include "biascav/error.hpp"

namespace biascav {

std::string to_string(FieldKind kind) {
    return kind == FieldKind::Electric ? "electric" : "magnetic";
}

FieldKind field_kind_from_string(const std::string& s) {
    if (s == "electric") return FieldKind::Electric;
    if (s == "magnetic") return FieldKind::Magnetic;
    throw ValidationError("unknown field kind '" + s + "'");
}

FieldMap::FieldMap(FieldKind kind, GridShape shape, Vec3 spacing, Vec3 origin,
                   std::vector<Vec3> values)
    : kind_(kind),
      shape_(shape),
      spacing_(std::move(spacing)),
      origin_(std::move(origin)),
      values_(std::move(values)) {
    if (shape_.nx < 2 || shape_.ny < 2 || shape_.nz < 2) {
        throw ValidationError("field map needs at least 2 nodes per axis");
    }
    if (!(spacing_.array() > 0.0).all() || !spacing_.allFinite()) {
        throw ValidationError("field map spacing must be positive");
    }
    if (values_.size() != shape_.size()) {
        throw ValidationError("field map value count does not match its grid");
    }
}

FieldMap FieldMap::uniform(FieldKind kind, GridShape shape, Vec3 spacing, Vec3 origin,
                           const Vec3& value) {
    return FieldMap(kind, shape, std::move(spacing), std::move(origin),
                    std::vector<Vec3>(shape.size(), value));
}

Vec3 FieldMap::upper() const {
    return origin_ + Vec3((shape_.nx - 1) * spacing_.x(), (shape_.ny - 1) * spacing_.y(),
                          (shape_.nz - 1) * spacing_.z());
}

Vec3 FieldMap::position(int i, int j, int k) const {
    return origin_ + Vec3(i * spacing_.x(), j * spacing_.y(), k * spacing_.z());
}

bool FieldMap::contains(const Vec3& p) const {
    const Vec3 hi = upper();
    for (int a = 0; a < 3; ++a) {
        const double tol = 1e-9 * spacing_[a];
        if (!(p[a] >= origin_[a] - tol && p[a] <= hi[a] + tol)) return false;
    }
    return true;
}

Vec3 FieldMap::sample(const Vec3& p) const {
    if (!contains(p)) {
        std::ostringstream os;
        os << "sample point (" << p.x() << ", " << p.y() << ", " << p.z()
           << ") m lies outside the field map";
        throw ValidationError(os.str());
    }
    const std::array<int, 3> n{shape_.nx, shape_.ny, shape_.nz};
    std::array<int, 3> i0{};
    std::array<double, 3> f{};
    for (int a = 0; a < 3; ++a) {
        const double u = std::clamp((p[a] - origin_[a]) / spacing_[a], 0.0, double(n[a] - 1));
        int c = static_cast<int>(std::floor(u));
        if (c >= n[a] - 1) c = n[a] - 2;
        i0[a] = c;
        f[a] = u - c;
    }
    Vec3 out = Vec3::Zero();
    for (int di = 0; di < 2; ++di) {
        const double wx = di ? f[0] : 1.0 - f[0];
        for (int dj = 0; dj < 2; ++dj) {
            const double wy = dj ? f[1] : 1.0 - f[1];
            for (int dk = 0; dk < 2; ++dk) {
                const double wz = dk ? f[2] : 1.0 - f[2];
                out += (wx * wy * wz) * at(i0[0] + di, i0[1] + dj, i0[2] + dk);
            }
        }
    }
    return out;
}

FieldMap FieldMap::scaled(double factor) const {
    std::vector<Vec3> v(values_.size());
    std::transform(values_.begin(), values_.end(), v.begin(),
                   [factor](const Vec3& x) { return Vec3(factor * x); });
    return FieldMap(kind_, shape_, spacing_, origin_, std::move(v));
}

bool operator==(const FieldMap& a, const FieldMap& b) {
    return a.kind_ == b.kind_ && a.shape_ == b.shape_ && a.spacing_ == b.spacing_ &&
           a.origin_ == b.origin_ && a.values_ == b.values_;
}

namespace {

constexpr const char* kMagic = "biascav field_map v1";

std::string unit_of(FieldKind kind) { return kind == FieldKind::Electric ? "V/m" : "T"; }

std::map<std::string, std::string> parse_metadata(const std::vector<std::string>& comments) {
    std::map<std::string, std::string> meta;
    for (const auto& c : comments) {
        std::istringstream ss(c);
        std::string token;
        while (ss >> token) {
            const auto eq = token.find('=');
            if (eq != std::string::npos) meta[token.substr(0, eq)] = token.substr(eq + 1);
        }
    }
    return meta;
}

Vec3 parse_triplet(const std::string& text, const std::string& key) {
    Vec3 v;
    std::stringstream ss(text);
    std::string part;
    int a = 0;
    while (std::getline(ss, part, ',')) {
        if (a >= 3) break;
        v[a++] = parse_number(part);
    }
    if (a != 3) throw ValidationError("field map metadata '" + key + "' needs three values");
    return v;
}

}  // namespace

void write_field_map_csv(std::ostream& os, const FieldMap& map) {
    CsvTable t;
    const auto& s = map.shape();
    const Vec3& h = map.spacing();
    const Vec3& o = map.origin();
    t.comments.push_back(kMagic);
    t.comments.push_back("kind=" + to_string(map.kind()) + " nodes=" + std::to_string(s.nx) + "x" +
                         std::to_string(s.ny) + "x" + std::to_string(s.nz) +
                         " spacing=" + format_number(h.x()) + "," + format_number(h.y()) + "," +
                         format_number(h.z()) + " origin=" + format_number(o.x()) + "," +
                         format_number(o.y()) + "," + format_number(o.z()));
    t.comments.push_back("units: x,y,z in m; Fx,Fy,Fz in " + unit_of(map.kind()));
    t.header = {"x", "y", "z", "Fx", "Fy", "Fz"};
    t.rows.reserve(s.size());
    for (int i = 0; i < s.nx; ++i) {
        for (int j = 0; j < s.ny; ++j) {
            for (int k = 0; k < s.nz; ++k) {
                const Vec3 p = map.position(i, j, k);
                const Vec3& f = map.at(i, j, k);
                t.rows.push_back({p.x(), p.y(), p.z(), f.x(), f.y(), f.z()});
            }
        }
    }
    write_csv(os, t);
}

void write_field_map_csv(const std::filesystem::path& path, const FieldMap& map) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    write_field_map_csv(os, map);
    os.flush();
    if (!os) throw IoError("failed writing '" + path.string() + "'");
}

FieldMap read_field_map_csv(std::istream& is) {
    const CsvTable t = read_csv(is);
    const std::size_t cx = t.column("x"), cy = t.column("y"), cz = t.column("z");
    const std::size_t fx = t.column("Fx"), fy = t.column("Fy"), fz = t.column("Fz");
    const auto meta = parse_metadata(t.comments);

    FieldKind kind = FieldKind::Electric;
    if (auto it = meta.find("kind"); it != meta.end()) kind = field_kind_from_string(it->second);

    GridShape shape;
    Vec3 spacing;
    Vec3 origin;
    if (meta.count("nodes") && meta.count("spacing") && meta.count("origin")) {
        const std::string& n = meta.at("nodes");
        if (std::sscanf(n.c_str(), "%dx%dx%d", &shape.nx, &shape.ny, &shape.nz) != 3) {
            throw ValidationError("bad field map metadata nodes='" + n + "'");
        }
        spacing = parse_triplet(meta.at("spacing"), "spacing");
        origin = parse_triplet(meta.at("origin"), "origin");
    } else {
        // No metadata: recover the grid from the distinct coordinates.
        std::array<std::vector<double>, 3> coords;
        for (const auto& r : t.rows) {
            coords[0].push_back(r[cx]);
            coords[1].push_back(r[cy]);
            coords[2].push_back(r[cz]);
        }
        std::array<int, 3> n{};
        for (int a = 0; a < 3; ++a) {
            auto& c = coords[a];
            std::sort(c.begin(), c.end());
            c.erase(std::unique(c.begin(), c.end()), c.end());
            if (c.size() < 2) throw ValidationError("field map CSV needs two nodes per axis");
            n[a] = static_cast<int>(c.size());
            origin[a] = c.front();
            spacing[a] = (c.back() - c.front()) / (n[a] - 1);
        }
        shape = GridShape{n[0], n[1], n[2]};
    }
    if (t.rows.size() != shape.size()) {
        throw ValidationError("field map CSV has " + std::to_string(t.rows.size()) +
                              " rows, grid needs " + std::to_string(shape.size()));
    }

    std::vector<Vec3> values(shape.size(), Vec3::Zero());
    std::vector<char> seen(shape.size(), 0);
    for (const auto& r : t.rows) {
        std::array<int, 3> idx{};
        const std::array<double, 3> p{r[cx], r[cy], r[cz]};
        const std::array<int, 3> n{shape.nx, shape.ny, shape.nz};
        for (int a = 0; a < 3; ++a) {
            const double u = (p[a] - origin[a]) / spacing[a];
            idx[a] = static_cast<int>(std::lround(u));
            if (idx[a] < 0 || idx[a] >= n[a] || std::abs(u - idx[a]) > 1e-6) {
                throw ValidationError("field map CSV row is not on the declared grid");
            }
        }
        const std::size_t id = shape.index(idx[0], idx[1], idx[2]);
        values[id] = Vec3(r[fx], r[fy], r[fz]);
        seen[id] = 1;
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
        throw ValidationError("field map CSV does not cover every grid node");
    }
    return FieldMap(kind, shape, spacing, origin, std::move(values));
}

FieldMap read_field_map_csv(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path.string() + "' for reading");
    return read_field_map_csv(is);
}

}  // namespace biascav
