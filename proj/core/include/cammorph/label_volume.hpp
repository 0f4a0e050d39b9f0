#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cammorph/geometry.hpp"

namespace cammorph {

/// Dense 3D voxel grid of integer labels, x-fastest storage order.
/// Label 0 is background, 1 femur, 2 acetabulum.
struct LabelVolume {
    Index3 dims{0, 0, 0};
    Vec3 spacing{1.0, 1.0, 1.0};
    Vec3 origin{0.0, 0.0, 0.0};  // world position of voxel (0,0,0) center
    std::vector<std::uint8_t> labels;

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    }
    std::size_t linear_index(int x, int y, int z) const {
        return static_cast<std::size_t>(z) * dims[1] * dims[0] +
               static_cast<std::size_t>(y) * dims[0] + x;
    }
    std::uint8_t at(int x, int y, int z) const { return labels[linear_index(x, y, z)]; }
    std::uint8_t& at(int x, int y, int z) { return labels[linear_index(x, y, z)]; }
    bool in_bounds(int x, int y, int z) const {
        return x >= 0 && y >= 0 && z >= 0 && x < dims[0] && y < dims[1] && z < dims[2];
    }
    Vec3 world(int x, int y, int z) const {
        return {origin.x + x * spacing.x, origin.y + y * spacing.y, origin.z + z * spacing.z};
    }
    double voxel_volume_mm3() const { return spacing.x * spacing.y * spacing.z; }

    bool operator==(const LabelVolume& o) const {
        return dims == o.dims && spacing == o.spacing && origin == o.origin && labels == o.labels;
    }
};

/// View of the voxels of one label within a volume.
class VoxelSet {
public:
    VoxelSet(const LabelVolume& volume, std::uint8_t label)
        : volume_(&volume), label_(label) {}

    const LabelVolume& volume() const { return *volume_; }
    std::uint8_t label() const { return label_; }
    bool contains(int x, int y, int z) const { return volume_->at(x, y, z) == label_; }
    std::size_t count() const;
    /// Voxel indices carrying the label, in storage order.
    std::vector<Index3> indices() const;

private:
    const LabelVolume* volume_;
    std::uint8_t label_;
};

/// Reads the text-header + raw volume format. `path` names the header file.
LabelVolume load_volume(const std::filesystem::path& path);

/// Writes header at `path` and the payload next to it as `<stem>.raw`.
void save_volume(const LabelVolume& v, const std::filesystem::path& path);

/// Nearest-neighbor resampling onto an isotropic grid of `target_mm` spacing.
/// Labels are categorical and are never blended.
LabelVolume resample_isotropic(const LabelVolume& v, double target_mm);

/// Foreground (label 1) = a ∩ b. Grids must match exactly.
LabelVolume intersect_masks(const VoxelSet& a, const VoxelSet& b);

/// Foreground voxels with at least one background 6-neighbor (the volume
/// border counts as background).
std::vector<Index3> boundary_voxels(const VoxelSet& set);

}  // namespace cammorph
