#include "cammorph/surface_extract.hpp"

#include <algorithm>
#include <cstdint>
#include <unordered_map>

#include "cammorph/errors.hpp"

namespace cammorph {

namespace {

// Padded node grid: node p corresponds to voxel (p - 1); the pad ring is
// background so every surface closes.
struct NodeGrid {
    const LabelVolume* v;
    std::uint8_t label;
    int nx, ny, nz;

    bool inside(int x, int y, int z) const {
        int vx = x - 1, vy = y - 1, vz = z - 1;
        return v->in_bounds(vx, vy, vz) && v->at(vx, vy, vz) == label;
    }
    Vec3 world(double x, double y, double z) const {
        return {v->origin.x + (x - 1) * v->spacing.x, v->origin.y + (y - 1) * v->spacing.y,
                v->origin.z + (z - 1) * v->spacing.z};
    }
};

constexpr int corner_dx(int c) { return c & 1; }
constexpr int corner_dy(int c) { return (c >> 1) & 1; }
constexpr int corner_dz(int c) { return (c >> 2) & 1; }

}  // namespace

TriangleMesh extract_surface(const LabelVolume& v, std::uint8_t label,
                             const SurfaceExtractOptions& opts) {
    NodeGrid grid{&v, label, v.dims[0] + 2, v.dims[1] + 2, v.dims[2] + 2};

    bool any = false;
    for (std::uint8_t l : v.labels)
        if (l == label) { any = true; break; }
    if (!any) throw NumericError("extract_surface: no voxel carries label " +
                                 std::to_string(static_cast<int>(label)));

    // Pass 1: per boundary cell, connected components of inside corners
    // (connectivity along cube edges). One dual vertex per component keeps
    // the mesh edge-manifold even where voxels touch diagonally.
    auto cell_key = [&](int cx, int cy, int cz) {
        return (static_cast<std::uint64_t>(cz) * (grid.ny - 1) + cy) * (grid.nx - 1) + cx;
    };
    // cell -> per-corner component root (-1 outside), plus vertex id per root
    struct CellInfo {
        std::array<std::int8_t, 8> root;
        std::array<int, 8> vertex_of_root;  // indexed by root corner
    };
    std::unordered_map<std::uint64_t, CellInfo> cells;

    TriangleMesh mesh;
    std::vector<Vec3> dual_origin;  // pre-smoothing positions for clamping

    for (int cz = 0; cz < grid.nz - 1; ++cz)
        for (int cy = 0; cy < grid.ny - 1; ++cy)
            for (int cx = 0; cx < grid.nx - 1; ++cx) {
                int mask = 0;
                for (int c = 0; c < 8; ++c)
                    if (grid.inside(cx + corner_dx(c), cy + corner_dy(c), cz + corner_dz(c)))
                        mask |= 1 << c;
                if (mask == 0 || mask == 255) continue;

                CellInfo info;
                info.root.fill(-1);
                info.vertex_of_root.fill(-1);

                // Flood components over the 12 cube edges.
                for (int seed = 0; seed < 8; ++seed) {
                    if (!(mask & (1 << seed)) || info.root[seed] >= 0) continue;
                    std::array<int, 8> stack;
                    int top = 0;
                    stack[top++] = seed;
                    info.root[seed] = static_cast<std::int8_t>(seed);
                    while (top > 0) {
                        int c = stack[--top];
                        for (int bit = 0; bit < 3; ++bit) {
                            int n = c ^ (1 << bit);
                            if ((mask & (1 << n)) && info.root[n] < 0) {
                                info.root[n] = static_cast<std::int8_t>(seed);
                                stack[top++] = n;
                            }
                        }
                    }
                }

                Vec3 center = grid.world(cx + 0.5, cy + 0.5, cz + 0.5);
                int n_components = 0;
                for (int c = 0; c < 8; ++c)
                    if (info.root[c] == c) ++n_components;
                for (int c = 0; c < 8; ++c) {
                    if (info.root[c] != c) continue;
                    Vec3 pos = center;
                    if (n_components > 1) {
                        // Nudge each component vertex toward its corners so
                        // coincident duals cannot produce degenerate quads.
                        Vec3 acc{0, 0, 0};
                        int n = 0;
                        for (int k = 0; k < 8; ++k)
                            if (info.root[k] == c) {
                                acc += grid.world(cx + corner_dx(k), cy + corner_dy(k),
                                                  cz + corner_dz(k));
                                ++n;
                            }
                        pos = center + (acc / n - center) * 0.25;
                    }
                    info.vertex_of_root[c] = static_cast<int>(mesh.vertices.size());
                    mesh.vertices.push_back(pos);
                    dual_origin.push_back(pos);
                }
                cells.emplace(cell_key(cx, cy, cz), info);
            }

    // Pass 2: a quad per sign-changing node edge, connecting the dual
    // vertices of the four cells around it, wound so normals point from
    // inside to outside.
    struct Axis { int d[3], u[3], w[3]; };
    static const Axis axes[3] = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}},
                                 {{0, 1, 0}, {0, 0, 1}, {1, 0, 0}},
                                 {{0, 0, 1}, {1, 0, 0}, {0, 1, 0}}};

    auto vertex_for = [&](int cx, int cy, int cz, int corner) {
        const CellInfo& info = cells.at(cell_key(cx, cy, cz));
        return info.vertex_of_root[info.root[corner]];
    };

    std::vector<std::array<int, 4>> quads;
    for (int a = 0; a < 3; ++a) {
        const Axis& ax = axes[a];
        for (int z = 0; z < grid.nz; ++z)
            for (int y = 0; y < grid.ny; ++y)
                for (int x = 0; x < grid.nx; ++x) {
                    int qx = x + ax.d[0], qy = y + ax.d[1], qz = z + ax.d[2];
                    if (qx >= grid.nx || qy >= grid.ny || qz >= grid.nz) continue;
                    bool in0 = grid.inside(x, y, z);
                    bool in1 = grid.inside(qx, qy, qz);
                    if (in0 == in1) continue;

                    int inx = in0 ? x : qx, iny = in0 ? y : qy, inz = in0 ? z : qz;
                    std::array<int, 4> q;
                    // Cells m = p - s*u - t*w for (s,t) in CCW order about +d.
                    static const int st[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
                    for (int k = 0; k < 4; ++k) {
                        int cx2 = x - st[k][0] * ax.u[0] - st[k][1] * ax.w[0];
                        int cy2 = y - st[k][0] * ax.u[1] - st[k][1] * ax.w[1];
                        int cz2 = z - st[k][0] * ax.u[2] - st[k][1] * ax.w[2];
                        int corner = (inx - cx2) | ((iny - cy2) << 1) | ((inz - cz2) << 2);
                        q[k] = vertex_for(cx2, cy2, cz2, corner);
                    }
                    if (!in0) std::swap(q[1], q[3]);  // outward = -d
                    quads.push_back(q);
                }
    }

    // Taubin smoothing over the quad graph, clamped to the dual cell so the
    // surface stays within half a voxel of the raw isosurface.
    if (opts.smooth_iterations > 0 && !quads.empty()) {
        std::vector<std::vector<int>> nbr(mesh.vertices.size());
        for (auto& q : quads)
            for (int k = 0; k < 4; ++k) {
                nbr[q[k]].push_back(q[(k + 1) % 4]);
                nbr[q[(k + 1) % 4]].push_back(q[k]);
            }
        for (auto& list : nbr) {
            std::sort(list.begin(), list.end());
            list.erase(std::unique(list.begin(), list.end()), list.end());
        }
        Vec3 clamp_half = v.spacing * 0.49;
        std::vector<Vec3> next(mesh.vertices.size());
        auto pass = [&](double factor) {
            for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
                Vec3 avg{0, 0, 0};
                for (int j : nbr[i]) avg += mesh.vertices[j];
                avg = avg / static_cast<double>(nbr[i].size());
                Vec3 p = mesh.vertices[i] + (avg - mesh.vertices[i]) * factor;
                for (int c = 0; c < 3; ++c)
                    p[c] = std::clamp(p[c], dual_origin[i][c] - clamp_half[c],
                                      dual_origin[i][c] + clamp_half[c]);
                next[i] = p;
            }
            mesh.vertices.swap(next);
        };
        for (int it = 0; it < opts.smooth_iterations; ++it) {
            pass(opts.smooth_lambda);
            pass(opts.smooth_mu);
        }
    }

    mesh.triangles.reserve(quads.size() * 2);
    for (auto& q : quads) {
        mesh.triangles.push_back({q[0], q[1], q[2]});
        mesh.triangles.push_back({q[0], q[2], q[3]});
    }

    if (opts.smooth_iterations > 0 && opts.restore_volume) {
        VoxelSet set(v, label);
        double target = static_cast<double>(set.count()) * v.voxel_volume_mm3();
        double got = enclosed_volume(mesh);
        if (got > 0 && target > 0) {
            double s = std::cbrt(target / got);
            Vec3 centroid{0, 0, 0};
            for (auto& p : mesh.vertices) centroid += p;
            centroid = centroid / static_cast<double>(mesh.vertices.size());
            for (auto& p : mesh.vertices) p = centroid + (p - centroid) * s;
        }
    }
    return mesh;
}

}  // namespace cammorph
