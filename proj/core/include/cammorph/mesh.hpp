#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cammorph/geometry.hpp"

namespace cammorph {

/// Indexed triangle surface in world millimetres with optional named
/// per-vertex scalar arrays.
struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::map<std::string, std::vector<double>> scalars;

    std::size_t vertex_count() const { return vertices.size(); }
    std::size_t triangle_count() const { return triangles.size(); }

    /// Welds vertices closer than `weld_tol` mm and drops triangles with
    /// area below `area_tol` mm² or repeated indices. Deterministic.
    void cleanup(double weld_tol = 1e-6, double area_tol = 1e-12);

    /// True when every undirected edge is used by exactly two triangles
    /// with opposite directions.
    bool is_watertight() const;

    Aabb bounds() const;
};

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);
Vec3 triangle_normal(const Vec3& a, const Vec3& b, const Vec3& c);  // unnormalized

/// Divergence-theorem signed volume; positive for outward orientation.
/// Throws NumericError for non-watertight meshes.
double enclosed_volume(const TriangleMesh& m);

double surface_area(const TriangleMesh& m);
double surface_area(const TriangleMesh& m, const std::vector<int>& triangle_subset);

/// Angle-weighted unit pseudo-normals. Throws NumericError on isolated
/// vertices (no incident triangle).
std::vector<Vec3> vertex_normals(const TriangleMesh& m);

/// Subdivided icosahedron sphere, useful for tests and phantoms.
TriangleMesh make_icosphere(double radius, int subdivisions, const Vec3& center = {0, 0, 0});

/// Axis-aligned box as 12 triangles, outward-oriented.
TriangleMesh make_box(const Vec3& lo, const Vec3& hi);

}  // namespace cammorph
