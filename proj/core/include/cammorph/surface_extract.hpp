#pragma once

#include "cammorph/label_volume.hpp"
#include "cammorph/mesh.hpp"

namespace cammorph {

struct SurfaceExtractOptions {
    /// Taubin smoothing passes (shrink/inflate pairs). 0 keeps the raw
    /// dual surface, whose enclosed volume equals the labelled voxel
    /// volume exactly.
    int smooth_iterations = 10;
    double smooth_lambda = 0.5;
    double smooth_mu = -0.53;
    /// After smoothing, rescale about the centroid so the enclosed volume
    /// matches the raw dual surface again.
    bool restore_volume = true;
};

/// Extracts the label/background isosurface as a watertight,
/// outward-oriented triangle mesh in world millimetres.
///
/// The surface is the dual (surface-nets) isosurface of the binary
/// indicator at level 0.5: one vertex per boundary cell component placed
/// at the cell center, quads separating each inside/outside voxel pair.
/// The raw surface is the voxel-boundary polyhedron, so its enclosed
/// volume is exactly count * voxel volume; smoothing relaxes the
/// staircase and the volume is restored by a uniform rescale.
TriangleMesh extract_surface(const LabelVolume& v, std::uint8_t label,
                             const SurfaceExtractOptions& opts = {});

}  // namespace cammorph
