#include "cammorph/spatial_index.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <unordered_map>

#include "cammorph/errors.hpp"

namespace cammorph {

ClosestPointResult closest_point_on_triangle(const Vec3& q, const Vec3& a, const Vec3& b,
                                             const Vec3& c) {
    // Region classification after Ericson, Real-Time Collision Detection.
    ClosestPointResult r;
    Vec3 ab = b - a, ac = c - a, aq = q - a;
    double d1 = dot(ab, aq), d2 = dot(ac, aq);
    if (d1 <= 0.0 && d2 <= 0.0) {
        r.point = a;
        r.feature = TriFeature::Vertex0;
        r.dist2 = norm2(q - a);
        return r;
    }

    Vec3 bq = q - b;
    double d3 = dot(ab, bq), d4 = dot(ac, bq);
    if (d3 >= 0.0 && d4 <= d3) {
        r.point = b;
        r.feature = TriFeature::Vertex1;
        r.dist2 = norm2(q - b);
        return r;
    }

    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        double v = d1 / (d1 - d3);
        r.point = a + ab * v;
        r.feature = TriFeature::Edge01;
        r.dist2 = norm2(q - r.point);
        return r;
    }

    Vec3 cq = q - c;
    double d5 = dot(ab, cq), d6 = dot(ac, cq);
    if (d6 >= 0.0 && d5 <= d6) {
        r.point = c;
        r.feature = TriFeature::Vertex2;
        r.dist2 = norm2(q - c);
        return r;
    }

    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        double w = d2 / (d2 - d6);
        r.point = a + ac * w;
        r.feature = TriFeature::Edge20;
        r.dist2 = norm2(q - r.point);
        return r;
    }

    double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        r.point = b + (c - b) * w;
        r.feature = TriFeature::Edge12;
        r.dist2 = norm2(q - r.point);
        return r;
    }

    double denom = 1.0 / (va + vb + vc);
    double v = vb * denom, w = vc * denom;
    r.point = a + ab * v + ac * w;
    r.feature = TriFeature::Face;
    r.dist2 = norm2(q - r.point);
    return r;
}

namespace {

struct Node {
    Aabb box;
    int left = -1, right = -1;  // internal children
    int first = 0, count = 0;   // leaf triangle range
    bool is_leaf() const { return count > 0; }
};

std::uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}

}  // namespace

struct SpatialIndex::Impl {
    const TriangleMesh* mesh = nullptr;
    std::vector<Node> nodes;
    std::vector<int> tri_order;  // leaf ranges index into this, values are triangle ids

    std::vector<Vec3> face_normals;                      // normalized
    std::unordered_map<std::uint64_t, Vec3> edge_normals;  // sum of adjacent face normals
    std::vector<Vec3> vertex_pseudo_normals;             // angle-weighted

    int build(std::vector<int>& ids, std::vector<Vec3>& centroids, int first, int count);
    void query(int node, const Vec3& q, ClosestPointResult& best) const;
};

int SpatialIndex::Impl::build(std::vector<int>& ids, std::vector<Vec3>& centroids, int first,
                              int count) {
    Node node;
    for (int i = first; i < first + count; ++i) {
        auto& t = mesh->triangles[ids[i]];
        node.box.expand(mesh->vertices[t[0]]);
        node.box.expand(mesh->vertices[t[1]]);
        node.box.expand(mesh->vertices[t[2]]);
    }
    int node_id = static_cast<int>(nodes.size());
    nodes.push_back(node);

    if (count <= 4) {
        nodes[node_id].first = first;
        nodes[node_id].count = count;
        return node_id;
    }

    Vec3 ext = node.box.extent();
    int axis = 0;
    if (ext.y > ext.x) axis = 1;
    if (ext.z > ext[axis]) axis = 2;

    int mid = first + count / 2;
    std::nth_element(ids.begin() + first, ids.begin() + mid, ids.begin() + first + count,
                     [&](int a, int b) {
                         double ca = centroids[a][axis], cb = centroids[b][axis];
                         return ca < cb || (ca == cb && a < b);
                     });

    int left = build(ids, centroids, first, mid - first);
    int right = build(ids, centroids, mid, first + count - mid);
    nodes[node_id].left = left;
    nodes[node_id].right = right;
    return node_id;
}

void SpatialIndex::Impl::query(int node_id, const Vec3& q, ClosestPointResult& best) const {
    const Node& node = nodes[node_id];
    if (node.is_leaf()) {
        for (int i = node.first; i < node.first + node.count; ++i) {
            int tri = tri_order[i];
            auto& t = mesh->triangles[tri];
            ClosestPointResult r = closest_point_on_triangle(q, mesh->vertices[t[0]],
                                                             mesh->vertices[t[1]],
                                                             mesh->vertices[t[2]]);
            r.triangle = tri;
            if (r.dist2 < best.dist2 || (r.dist2 == best.dist2 && tri < best.triangle))
                best = r;
        }
        return;
    }
    double dl = nodes[node.left].box.dist2(q);
    double dr = nodes[node.right].box.dist2(q);
    int near = node.left, far = node.right;
    double dnear = dl, dfar = dr;
    if (dr < dl) {
        std::swap(near, far);
        std::swap(dnear, dfar);
    }
    // Non-strict bound keeps equal-distance candidates so ties resolve by
    // triangle index exactly as a linear scan would.
    if (dnear <= best.dist2) query(near, q, best);
    if (dfar <= best.dist2) query(far, q, best);
}

SpatialIndex::SpatialIndex(const TriangleMesh& mesh) : impl_(std::make_unique<Impl>()) {
    if (mesh.triangles.empty()) throw NumericError("SpatialIndex over empty mesh");
    impl_->mesh = &mesh;

    std::vector<Vec3> centroids(mesh.triangles.size());
    impl_->face_normals.resize(mesh.triangles.size());
    for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
        auto& t = mesh.triangles[i];
        const Vec3 &a = mesh.vertices[t[0]], &b = mesh.vertices[t[1]], &c = mesh.vertices[t[2]];
        centroids[i] = (a + b + c) / 3.0;
        impl_->face_normals[i] = normalized(triangle_normal(a, b, c));
        for (int e = 0; e < 3; ++e)
            impl_->edge_normals[edge_key(t[e], t[(e + 1) % 3])] += impl_->face_normals[i];
    }
    impl_->vertex_pseudo_normals = vertex_normals(mesh);

    impl_->tri_order.resize(mesh.triangles.size());
    std::iota(impl_->tri_order.begin(), impl_->tri_order.end(), 0);
    impl_->nodes.reserve(mesh.triangles.size());
    impl_->build(impl_->tri_order, centroids, 0, static_cast<int>(mesh.triangles.size()));
}

SpatialIndex::~SpatialIndex() = default;
SpatialIndex::SpatialIndex(SpatialIndex&&) noexcept = default;
SpatialIndex& SpatialIndex::operator=(SpatialIndex&&) noexcept = default;

const TriangleMesh& SpatialIndex::mesh() const { return *impl_->mesh; }

ClosestPointResult SpatialIndex::closest_point(const Vec3& query) const {
    ClosestPointResult best;
    best.dist2 = std::numeric_limits<double>::max();
    best.triangle = std::numeric_limits<int>::max();
    impl_->query(0, query, best);
    return best;
}

double SpatialIndex::signed_distance(const Vec3& query) const {
    ClosestPointResult r = closest_point(query);
    const TriangleMesh& m = *impl_->mesh;
    auto& t = m.triangles[r.triangle];

    Vec3 pseudo;
    switch (r.feature) {
        case TriFeature::Vertex0: pseudo = impl_->vertex_pseudo_normals[t[0]]; break;
        case TriFeature::Vertex1: pseudo = impl_->vertex_pseudo_normals[t[1]]; break;
        case TriFeature::Vertex2: pseudo = impl_->vertex_pseudo_normals[t[2]]; break;
        case TriFeature::Edge01: pseudo = impl_->edge_normals.at(edge_key(t[0], t[1])); break;
        case TriFeature::Edge12: pseudo = impl_->edge_normals.at(edge_key(t[1], t[2])); break;
        case TriFeature::Edge20: pseudo = impl_->edge_normals.at(edge_key(t[2], t[0])); break;
        case TriFeature::Face: pseudo = impl_->face_normals[r.triangle]; break;
    }
    double d = std::sqrt(r.dist2);
    return dot(query - r.point, pseudo) >= 0.0 ? d : -d;
}

double signed_distance(const Vec3& query, const TriangleMesh& target, const SpatialIndex& index) {
    if (&index.mesh() != &target) throw NumericError("signed_distance: index built on another mesh");
    return index.signed_distance(query);
}

std::vector<double> per_vertex_distance_field(TriangleMesh& source, const TriangleMesh& target) {
    SpatialIndex index(target);
    std::vector<double> d(source.vertices.size());
    for (std::size_t i = 0; i < source.vertices.size(); ++i)
        d[i] = index.signed_distance(source.vertices[i]);
    source.scalars["healthy_distance"] = d;
    return d;
}

}  // namespace cammorph
