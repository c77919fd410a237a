#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "biascav/geometry.hpp"

namespace biascav {

enum class FieldKind { Electric, Magnetic };

[[nodiscard]] std::string to_string(FieldKind kind);
[[nodiscard]] FieldKind field_kind_from_string(const std::string& s);

/// Node counts of a regular grid; z varies fastest in storage order.
struct GridShape {
    int nx = 0;
    int ny = 0;
    int nz = 0;

    [[nodiscard]] std::size_t size() const noexcept {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
               static_cast<std::size_t>(nz);
    }
    [[nodiscard]] std::size_t index(int i, int j, int k) const noexcept {
        return (static_cast<std::size_t>(i) * static_cast<std::size_t>(ny) +
                static_cast<std::size_t>(j)) *
                   static_cast<std::size_t>(nz) +
               static_cast<std::size_t>(k);
    }

    friend bool operator==(const GridShape&, const GridShape&) = default;
};

/// Vector field sampled on the nodes of a regular grid (V/m for electric, T for magnetic).
/// Immutable once built.
class FieldMap {
public:
    FieldMap(FieldKind kind, GridShape shape, Vec3 spacing, Vec3 origin, std::vector<Vec3> values);

    [[nodiscard]] static FieldMap uniform(FieldKind kind, GridShape shape, Vec3 spacing,
                                          Vec3 origin, const Vec3& value);

    [[nodiscard]] FieldKind kind() const noexcept { return kind_; }
    [[nodiscard]] const GridShape& shape() const noexcept { return shape_; }
    [[nodiscard]] const Vec3& spacing() const noexcept { return spacing_; }
    [[nodiscard]] const Vec3& origin() const noexcept { return origin_; }
    [[nodiscard]] const std::vector<Vec3>& values() const noexcept { return values_; }

    [[nodiscard]] Vec3 upper() const;
    [[nodiscard]] Vec3 center() const { return origin_ + 0.5 * (upper() - origin_); }
    [[nodiscard]] Vec3 position(int i, int j, int k) const;
    [[nodiscard]] const Vec3& at(int i, int j, int k) const { return values_[shape_.index(i, j, k)]; }
    [[nodiscard]] bool contains(const Vec3& p) const;

    /// Trilinear interpolation; throws ValidationError outside the grid.
    [[nodiscard]] Vec3 sample(const Vec3& p) const;

    [[nodiscard]] FieldMap scaled(double factor) const;

    friend bool operator==(const FieldMap& a, const FieldMap& b);

private:
    FieldKind kind_;
    GridShape shape_;
    Vec3 spacing_;
    Vec3 origin_;
    std::vector<Vec3> values_;
};

/// CSV with columns x,y,z,Fx,Fy,Fz in SI units and a metadata comment carrying the grid.
void write_field_map_csv(std::ostream& os, const FieldMap& map);
void write_field_map_csv(const std::filesystem::path& path, const FieldMap& map);
[[nodiscard]] FieldMap read_field_map_csv(std::istream& is);
[[nodiscard]] FieldMap read_field_map_csv(const std::filesystem::path& path);

}  // namespace biascav
