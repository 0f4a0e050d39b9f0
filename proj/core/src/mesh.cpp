#include "cammorph/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>

#include "cammorph/errors.hpp"

namespace cammorph {

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * norm(cross(b - a, c - a));
}

Vec3 triangle_normal(const Vec3& a, const Vec3& b, const Vec3& c) {
    return cross(b - a, c - a);
}

namespace {

struct CellKey {
    std::int64_t x, y, z;
    bool operator==(const CellKey& o) const { return x == o.x && y == o.y && z == o.z; }
};

struct CellKeyHash {
    std::size_t operator()(const CellKey& k) const {
        std::uint64_t h = 1469598103934665603ull;
        auto mix = [&h](std::int64_t v) {
            h ^= static_cast<std::uint64_t>(v);
            h *= 1099511628211ull;
        };
        mix(k.x); mix(k.y); mix(k.z);
        return static_cast<std::size_t>(h);
    }
};

}  // namespace

void TriangleMesh::cleanup(double weld_tol, double area_tol) {
    if (vertices.empty()) return;

    // Snap-to-grid welding: vertices mapping to the same cell of size
    // weld_tol collapse to the first occurrence.
    std::unordered_map<CellKey, int, CellKeyHash> seen;
    std::vector<int> remap(vertices.size());
    std::vector<Vec3> new_vertices;
    new_vertices.reserve(vertices.size());
    std::vector<int> keep_src;
    keep_src.reserve(vertices.size());

    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const Vec3& p = vertices[i];
        CellKey key{static_cast<std::int64_t>(std::floor(p.x / weld_tol)),
                    static_cast<std::int64_t>(std::floor(p.y / weld_tol)),
                    static_cast<std::int64_t>(std::floor(p.z / weld_tol))};
        auto it = seen.find(key);
        if (it == seen.end()) {
            int id = static_cast<int>(new_vertices.size());
            seen.emplace(key, id);
            new_vertices.push_back(p);
            keep_src.push_back(static_cast<int>(i));
            remap[i] = id;
        } else {
            remap[i] = it->second;
        }
    }

    std::vector<std::array<int, 3>> new_tris;
    new_tris.reserve(triangles.size());
    for (auto& t : triangles) {
        std::array<int, 3> r{remap[t[0]], remap[t[1]], remap[t[2]]};
        if (r[0] == r[1] || r[1] == r[2] || r[0] == r[2]) continue;
        if (triangle_area(new_vertices[r[0]], new_vertices[r[1]], new_vertices[r[2]]) < area_tol)
            continue;
        new_tris.push_back(r);
    }

    // Remap scalar arrays alongside vertices.
    for (auto& [name, values] : scalars) {
        std::vector<double> nv(new_vertices.size());
        for (std::size_t i = 0; i < new_vertices.size(); ++i)
            nv[i] = values[keep_src[i]];
        values = std::move(nv);
    }
    vertices = std::move(new_vertices);
    triangles = std::move(new_tris);
}

bool TriangleMesh::is_watertight() const {
    if (triangles.empty()) return false;
    // Directed-edge counting: watertight + consistently oriented means each
    // undirected edge appears once in each direction.
    std::unordered_map<std::uint64_t, int> count;
    count.reserve(triangles.size() * 3);
    auto key = [](int a, int b) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
               static_cast<std::uint32_t>(b);
    };
    for (auto& t : triangles) {
        for (int e = 0; e < 3; ++e) {
            int a = t[e], b = t[(e + 1) % 3];
            if (++count[key(a, b)] > 1) return false;
        }
    }
    for (auto& [k, c] : count) {
        int a = static_cast<int>(k >> 32);
        int b = static_cast<int>(k & 0xffffffffu);
        auto rev = count.find(key(b, a));
        if (rev == count.end() || rev->second != 1) return false;
    }
    return true;
}

Aabb TriangleMesh::bounds() const {
    Aabb box;
    for (auto& v : vertices) box.expand(v);
    return box;
}

double enclosed_volume(const TriangleMesh& m) {
    if (!m.is_watertight()) throw NumericError("enclosed_volume requires a watertight mesh");
    // Shift by the centroid so the result is translation-invariant in
    // floating point, not just analytically.
    Vec3 c{0, 0, 0};
    for (auto& v : m.vertices) c += v;
    c = c / static_cast<double>(m.vertices.size());
    double vol6 = 0.0;
    for (auto& t : m.triangles) {
        Vec3 a = m.vertices[t[0]] - c;
        Vec3 b = m.vertices[t[1]] - c;
        Vec3 d = m.vertices[t[2]] - c;
        vol6 += dot(a, cross(b, d));
    }
    return vol6 / 6.0;
}

double surface_area(const TriangleMesh& m) {
    double area = 0.0;
    for (auto& t : m.triangles)
        area += triangle_area(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]);
    return area;
}

double surface_area(const TriangleMesh& m, const std::vector<int>& triangle_subset) {
    double area = 0.0;
    for (int idx : triangle_subset) {
        if (idx < 0 || static_cast<std::size_t>(idx) >= m.triangles.size())
            throw NumericError("surface_area: triangle index out of range");
        auto& t = m.triangles[idx];
        area += triangle_area(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]);
    }
    return area;
}

std::vector<Vec3> vertex_normals(const TriangleMesh& m) {
    std::vector<Vec3> normals(m.vertices.size(), Vec3{0, 0, 0});
    std::vector<char> touched(m.vertices.size(), 0);
    for (auto& t : m.triangles) {
        const Vec3& a = m.vertices[t[0]];
        const Vec3& b = m.vertices[t[1]];
        const Vec3& c = m.vertices[t[2]];
        Vec3 n = normalized(triangle_normal(a, b, c));
        const Vec3* p[3] = {&a, &b, &c};
        for (int i = 0; i < 3; ++i) {
            const Vec3& u = *p[(i + 1) % 3] - *p[i];
            const Vec3& v = *p[(i + 2) % 3] - *p[i];
            double cosang = dot(normalized(u), normalized(v));
            double angle = std::acos(std::clamp(cosang, -1.0, 1.0));
            normals[t[i]] += n * angle;
            touched[t[i]] = 1;
        }
    }
    for (std::size_t i = 0; i < normals.size(); ++i) {
        if (!touched[i]) throw NumericError("vertex_normals: isolated vertex " + std::to_string(i));
        normals[i] = normalized(normals[i]);
    }
    return normals;
}

TriangleMesh make_icosphere(double radius, int subdivisions, const Vec3& center) {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    TriangleMesh m;
    m.vertices = {{-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
                  {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
                  {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
    m.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                   {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                   {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                   {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

    for (int s = 0; s < subdivisions; ++s) {
        std::unordered_map<std::uint64_t, int> midpoint;
        auto mid = [&](int a, int b) {
            std::uint64_t key = a < b
                ? ((static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b))
                : ((static_cast<std::uint64_t>(b) << 32) | static_cast<std::uint32_t>(a));
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            int id = static_cast<int>(m.vertices.size());
            m.vertices.push_back((m.vertices[a] + m.vertices[b]) * 0.5);
            midpoint.emplace(key, id);
            return id;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(m.triangles.size() * 4);
        for (auto& t : m.triangles) {
            int ab = mid(t[0], t[1]), bc = mid(t[1], t[2]), ca = mid(t[2], t[0]);
            next.push_back({t[0], ab, ca});
            next.push_back({t[1], bc, ab});
            next.push_back({t[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        m.triangles = std::move(next);
    }
    for (auto& v : m.vertices) v = center + normalized(v) * radius;
    return m;
}

TriangleMesh make_box(const Vec3& lo, const Vec3& hi) {
    TriangleMesh m;
    m.vertices = {{lo.x, lo.y, lo.z}, {hi.x, lo.y, lo.z}, {hi.x, hi.y, lo.z}, {lo.x, hi.y, lo.z},
                  {lo.x, lo.y, hi.z}, {hi.x, lo.y, hi.z}, {hi.x, hi.y, hi.z}, {lo.x, hi.y, hi.z}};
    m.triangles = {{0, 2, 1}, {0, 3, 2},   // z = lo
                   {4, 5, 6}, {4, 6, 7},   // z = hi
                   {0, 1, 5}, {0, 5, 4},   // y = lo
                   {3, 7, 6}, {3, 6, 2},   // y = hi
                   {0, 4, 7}, {0, 7, 3},   // x = lo
                   {1, 2, 6}, {1, 6, 5}};  // x = hi
    return m;
}

}  // namespace cammorph
