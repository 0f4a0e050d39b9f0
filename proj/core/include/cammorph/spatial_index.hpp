#pragma once

#include <memory>
#include <vector>

#include "cammorph/mesh.hpp"

namespace cammorph {

/// Which simplex feature the closest point lies on; used to pick the
/// pseudo-normal that decides the distance sign.
enum class TriFeature { Vertex0, Vertex1, Vertex2, Edge01, Edge12, Edge20, Face };

struct ClosestPointResult {
    Vec3 point;
    double dist2 = 0.0;
    int triangle = -1;
    TriFeature feature = TriFeature::Face;
};

/// Closest point on one triangle, with the feature it lies on.
ClosestPointResult closest_point_on_triangle(const Vec3& q, const Vec3& a, const Vec3& b,
                                             const Vec3& c);

/// Static bounding-volume hierarchy over the triangles of one mesh.
/// Queries return exactly the global minimum of (squared distance,
/// triangle index), so results match a brute-force scan bit for bit.
/// Read-only after construction; safe for concurrent queries.
class SpatialIndex {
public:
    explicit SpatialIndex(const TriangleMesh& mesh);
    ~SpatialIndex();
    SpatialIndex(SpatialIndex&&) noexcept;
    SpatialIndex& operator=(SpatialIndex&&) noexcept;
    SpatialIndex(const SpatialIndex&) = delete;
    SpatialIndex& operator=(const SpatialIndex&) = delete;

    const TriangleMesh& mesh() const;

    ClosestPointResult closest_point(const Vec3& query) const;

    /// Signed Euclidean distance to the mesh surface: positive outside
    /// (along the outward pseudo-normal at the nearest feature), negative
    /// inside. Requires the indexed mesh to be watertight and oriented.
    double signed_distance(const Vec3& query) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Convenience wrapper matching the one-shot call signature.
double signed_distance(const Vec3& query, const TriangleMesh& target, const SpatialIndex& index);

/// For each source vertex, signed distance to `target`; result is also
/// stored on the returned copy of `source` as scalar array
/// "healthy_distance".
std::vector<double> per_vertex_distance_field(TriangleMesh& source, const TriangleMesh& target);

}  // namespace cammorph
