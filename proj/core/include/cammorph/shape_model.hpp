#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "cammorph/mesh.hpp"
#include "cammorph/spatial_index.hpp"

namespace cammorph {

/// Vertex positions on the fixed template topology.
using CorrespondedShape = std::vector<Vec3>;

/// Statistical shape model over a fixed vertex correspondence: mean,
/// eigenmodes with variances, and the per-vertex focus weights the
/// decomposition was built with. Modes are orthonormal under the
/// focus-weighted inner product and stored unscaled.
struct ShapeModel {
    CorrespondedShape mean;
    std::vector<CorrespondedShape> modes;  // K mode displacement fields
    std::vector<double> variances;         // λ_k, mm², non-increasing
    std::vector<double> focus_weights;     // w_i ≥ 0, one per vertex
    std::vector<std::array<int, 3>> topology;
    std::vector<int> excluded_modes;       // sorted, subset of retained modes

    // Template head sphere; seeds the rough similarity initialization.
    Vec3 head_center{0, 0, 0};
    double head_radius = 0.0;

    int mode_count() const { return static_cast<int>(modes.size()); }
    std::size_t vertex_count() const { return mean.size(); }

    TriangleMesh mean_mesh() const;

    /// Max |<phi_j, phi_k>_w - delta_jk| over all mode pairs.
    double orthonormality_residual() const;
};

struct ShapeCoefficients {
    std::vector<double> b;  // mode loadings, mm
    Similarity similarity;
};

struct FitResult {
    ShapeCoefficients coefficients;
    CorrespondedShape fitted;   // reconstruct(model, coefficients), all modes
    double residual_rms = 0.0;  // focus-weighted RMS vertex-to-surface distance
    bool quality_gate_passed = false;
};

struct FitOptions {
    double tolerance_mm = 1e-4;  // vertex RMS change convergence threshold
    int max_iterations = 200;
    double gate_mm = 1.0;        // residual gate standing in for an atlas fallback
    int starts = 3;              // perturbed initial similarities, best residual kept
    double clamp_sigmas = 3.0;   // |b_k| <= clamp_sigmas * sqrt(lambda_k)
};

struct ProcrustesResult {
    std::vector<CorrespondedShape> aligned;
    CorrespondedShape mean;
};

/// Least-squares similarity s*R*x + t mapping src onto dst under
/// per-vertex weights.
Similarity weighted_umeyama(const CorrespondedShape& src, const CorrespondedShape& dst,
                            const std::vector<double>& weights);

/// Generalized weighted Procrustes alignment. Iterates until the mean
/// changes by less than 1e-7 mm RMS. The mean is centered at the origin
/// with its weighted RMS size fixed to the first shape's.
ProcrustesResult procrustes_align(const std::vector<CorrespondedShape>& shapes,
                                  const std::vector<double>& weights);

/// Weighted PCA of aligned shapes. Retains the smallest mode count whose
/// cumulative variance reaches `variance_target`.
ShapeModel build_model(const std::vector<CorrespondedShape>& aligned_shapes,
                       const std::vector<double>& focus_weights, double variance_target,
                       const std::vector<std::array<int, 3>>& topology);

/// similarity ∘ (mean + sum over active modes of b_k * phi_k).
CorrespondedShape reconstruct(const ShapeModel& model, const ShapeCoefficients& c,
                              const std::vector<int>& active_modes);
CorrespondedShape reconstruct(const ShapeModel& model, const ShapeCoefficients& c);  // all modes

/// Focus-weighted projection of (shape - mean) onto the modes; no clamp.
std::vector<double> project_coefficients(const ShapeModel& model, const CorrespondedShape& shape);

/// Iterative constrained fit: closest-point targets, similarity update,
/// mode projection, per-mode clamping. Throws NumericError when the
/// residual rises for 10 consecutive iterations on every start.
FitResult fit_to_surface(const ShapeModel& model, const TriangleMesh& target,
                         const Similarity& init, const FitOptions& opts = {});

/// Patient-specific healthy reconstruction: the fitted coefficients with
/// the cam-associated modes removed.
CorrespondedShape simulate_healthy(const ShapeModel& model, const FitResult& fit);

/// Modes whose focus-weighted displacement energy concentrates inside the
/// ROI beyond `energy_threshold` (must lie in (0,1)).
std::vector<int> flag_cam_modes(const ShapeModel& model, const std::vector<int>& roi,
                                double energy_threshold = 0.6);

/// Weighted RMS distance between two corresponded shapes.
double shape_rms(const CorrespondedShape& a, const CorrespondedShape& b,
                 const std::vector<double>& weights);

// --- serialization ---

/// Writes the model file at `path` plus the template topology (with the
/// mean as vertex positions) next to it as `<stem>_template.ply`.
void save_model(const ShapeModel& model, const std::filesystem::path& path);
ShapeModel load_model(const std::filesystem::path& path);

/// Plain-text integer list, one index per line, '#' comments allowed.
std::vector<int> load_index_list(const std::filesystem::path& path);
void save_index_list(const std::vector<int>& indices, const std::filesystem::path& path);

}  // namespace cammorph
