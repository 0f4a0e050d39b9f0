#pragma once

#include "cammorph/label_volume.hpp"

namespace cammorph {

struct SphereFit {
    Vec3 center{0, 0, 0};  // mm
    double radius = 0.0;   // mm
    double vote_score = 0.0;  // peak accumulator votes / boundary voxel count
};

struct HoughOptions {
    double radius_min_mm = 15.0;
    double radius_max_mm = 35.0;
    double radius_step_mm = 0.5;
};

/// Spherical Hough transform: boundary voxels vote along the inward
/// Sobel gradient of the binary mask at each candidate radius; the
/// accumulator peak wins. Ties break to the smallest radius, then the
/// lexicographically smallest center cell. Accumulator resolution equals
/// the voxel spacing.
SphereFit hough_sphere(const VoxelSet& mask, const HoughOptions& opts = {});

/// Foreground = mask voxels whose center lies within fit.radius + margin
/// of fit.center.
LabelVolume refine_head_mask(const VoxelSet& femur, const SphereFit& fit, double margin_mm = 0.0);

/// Foreground voxel count times voxel volume, in cm³.
double head_volume_cm3(const LabelVolume& head_mask);

}  // namespace cammorph
