#include "cammorph/shape_model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "cammorph/errors.hpp"

namespace cammorph {

namespace {

Quaternion quaternion_from_matrix(const Eigen::Matrix3d& m) {
    // Shepperd's method: pick the dominant diagonal branch.
    Quaternion q;
    double tr = m(0, 0) + m(1, 1) + m(2, 2);
    if (tr > 0) {
        double s = std::sqrt(tr + 1.0) * 2;
        q.w = 0.25 * s;
        q.x = (m(2, 1) - m(1, 2)) / s;
        q.y = (m(0, 2) - m(2, 0)) / s;
        q.z = (m(1, 0) - m(0, 1)) / s;
    } else if (m(0, 0) > m(1, 1) && m(0, 0) > m(2, 2)) {
        double s = std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2)) * 2;
        q.w = (m(2, 1) - m(1, 2)) / s;
        q.x = 0.25 * s;
        q.y = (m(0, 1) + m(1, 0)) / s;
        q.z = (m(0, 2) + m(2, 0)) / s;
    } else if (m(1, 1) > m(2, 2)) {
        double s = std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2)) * 2;
        q.w = (m(0, 2) - m(2, 0)) / s;
        q.x = (m(0, 1) + m(1, 0)) / s;
        q.y = 0.25 * s;
        q.z = (m(1, 2) + m(2, 1)) / s;
    } else {
        double s = std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1)) * 2;
        q.w = (m(1, 0) - m(0, 1)) / s;
        q.x = (m(0, 2) + m(2, 0)) / s;
        q.y = (m(1, 2) + m(2, 1)) / s;
        q.z = 0.25 * s;
    }
    q.normalize();
    return q;
}

Vec3 weighted_centroid(const CorrespondedShape& s, const std::vector<double>& w, double wsum) {
    Vec3 c{0, 0, 0};
    for (std::size_t i = 0; i < s.size(); ++i) c += s[i] * w[i];
    return c / wsum;
}

}  // namespace

TriangleMesh ShapeModel::mean_mesh() const {
    TriangleMesh m;
    m.vertices = mean;
    m.triangles = topology;
    return m;
}

double ShapeModel::orthonormality_residual() const {
    double worst = 0.0;
    for (int j = 0; j < mode_count(); ++j)
        for (int k = j; k < mode_count(); ++k) {
            double dotp = 0.0;
            for (std::size_t i = 0; i < vertex_count(); ++i)
                dotp += focus_weights[i] * dot(modes[j][i], modes[k][i]);
            worst = std::max(worst, std::abs(dotp - (j == k ? 1.0 : 0.0)));
        }
    return worst;
}

Similarity weighted_umeyama(const CorrespondedShape& src, const CorrespondedShape& dst,
                            const std::vector<double>& weights) {
    if (src.size() != dst.size() || src.size() != weights.size())
        throw NumericError("weighted_umeyama: size mismatch");
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    if (wsum <= 0) throw NumericError("weighted_umeyama: weights sum to zero");

    Vec3 cs = weighted_centroid(src, weights, wsum);
    Vec3 cd = weighted_centroid(dst, weights, wsum);

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    double var_src = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i) {
        Vec3 a = src[i] - cs;
        Vec3 b = dst[i] - cd;
        var_src += weights[i] * norm2(a);
        Eigen::Vector3d ea(a.x, a.y, a.z), eb(b.x, b.y, b.z);
        cov += weights[i] * (eb * ea.transpose());
    }
    cov /= wsum;
    var_src /= wsum;
    if (var_src <= 0) throw NumericError("weighted_umeyama: degenerate source shape");

    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Vector3d d = Eigen::Vector3d::Ones();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) d(2) = -1.0;
    Eigen::Matrix3d rot = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
    double scale = svd.singularValues().dot(d) / var_src;

    Similarity sim;
    sim.rotation = quaternion_from_matrix(rot);
    sim.scale = scale;
    sim.translation = cd - sim.rotation.rotate(cs) * scale;
    return sim;
}

ProcrustesResult procrustes_align(const std::vector<CorrespondedShape>& shapes,
                                  const std::vector<double>& weights) {
    if (shapes.size() < 2) throw NumericError("procrustes_align: need at least 2 shapes");
    const std::size_t nv = shapes[0].size();
    for (auto& s : shapes)
        if (s.size() != nv) throw NumericError("procrustes_align: vertex count mismatch");
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    if (weights.size() != nv || wsum <= 0)
        throw NumericError("procrustes_align: invalid weights");

    // Gauge: centered reference with the first shape's weighted RMS size.
    auto center = [&](CorrespondedShape s) {
        Vec3 c = weighted_centroid(s, weights, wsum);
        for (auto& p : s) p -= c;
        return s;
    };
    auto wrms = [&](const CorrespondedShape& s) {
        double acc = 0.0;
        for (std::size_t i = 0; i < nv; ++i) acc += weights[i] * norm2(s[i]);
        return std::sqrt(acc / wsum);
    };

    ProcrustesResult result;
    result.aligned = shapes;
    CorrespondedShape mean = center(shapes[0]);
    const double ref_size = wrms(mean);

    for (int iter = 0; iter < 200; ++iter) {
        for (auto& s : result.aligned) {
            Similarity sim = weighted_umeyama(s, mean, weights);
            for (auto& p : s) p = sim.apply(p);
        }
        CorrespondedShape next(nv, Vec3{0, 0, 0});
        for (auto& s : result.aligned)
            for (std::size_t i = 0; i < nv; ++i) next[i] += s[i];
        for (auto& p : next) p = p / static_cast<double>(result.aligned.size());
        next = center(next);
        double size = wrms(next);
        if (size > 0)
            for (auto& p : next) p *= ref_size / size;

        double change = shape_rms(next, mean, weights);
        mean = std::move(next);
        if (change < 1e-7) break;
    }
    result.mean = std::move(mean);
    return result;
}

ShapeModel build_model(const std::vector<CorrespondedShape>& aligned_shapes,
                       const std::vector<double>& focus_weights, double variance_target,
                       const std::vector<std::array<int, 3>>& topology) {
    const auto n = static_cast<int>(aligned_shapes.size());
    if (n < 2) throw NumericError("build_model: need at least 2 shapes");
    if (variance_target <= 0 || variance_target > 1)
        throw NumericError("build_model: variance_target must be in (0, 1]");
    const std::size_t nv = aligned_shapes[0].size();
    if (focus_weights.size() != nv) throw NumericError("build_model: weight count mismatch");

    ShapeModel model;
    model.focus_weights = focus_weights;
    model.topology = topology;
    model.mean.assign(nv, Vec3{0, 0, 0});
    for (auto& s : aligned_shapes)
        for (std::size_t i = 0; i < nv; ++i) model.mean[i] += s[i];
    for (auto& p : model.mean) p = p / static_cast<double>(n);

    std::vector<double> sqrt_w(nv);
    for (std::size_t i = 0; i < nv; ++i) sqrt_w[i] = std::sqrt(focus_weights[i]);

    // Snapshot PCA in the weight-scaled space: Gram matrix of the N
    // centered rows, eigenmodes lifted back through A^T.
    Eigen::MatrixXd a(n, 3 * nv);
    for (int r = 0; r < n; ++r)
        for (std::size_t i = 0; i < nv; ++i) {
            Vec3 d = aligned_shapes[r][i] - model.mean[i];
            a(r, 3 * i + 0) = sqrt_w[i] * d.x;
            a(r, 3 * i + 1) = sqrt_w[i] * d.y;
            a(r, 3 * i + 2) = sqrt_w[i] * d.z;
        }

    Eigen::MatrixXd gram = a * a.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success) throw NumericError("build_model: eigensolver failed");

    // Eigen returns ascending order; walk from the top.
    std::vector<std::pair<double, int>> ranked;
    double total = 0.0;
    for (int k = 0; k < n; ++k) {
        double g = std::max(0.0, eig.eigenvalues()(k));
        ranked.push_back({g, k});
        total += g;
    }
    std::sort(ranked.begin(), ranked.end(), [](auto& x, auto& y) {
        return x.first > y.first || (x.first == y.first && x.second < y.second);
    });

    if (total <= 1e-18 * static_cast<double>(nv)) return model;  // all shapes identical

    double cum = 0.0;
    for (auto& [g, col] : ranked) {
        if (g <= total * 1e-12) break;
        Eigen::VectorXd mode_w = a.transpose() * eig.eigenvectors().col(col) / std::sqrt(g);
        CorrespondedShape mode(nv, Vec3{0, 0, 0});
        for (std::size_t i = 0; i < nv; ++i) {
            if (sqrt_w[i] > 0)
                mode[i] = Vec3{mode_w(3 * i + 0), mode_w(3 * i + 1), mode_w(3 * i + 2)} /
                          sqrt_w[i];
        }
        model.modes.push_back(std::move(mode));
        model.variances.push_back(g / (n - 1));
        cum += g;
        if (cum >= variance_target * total) break;
    }
    return model;
}

CorrespondedShape reconstruct(const ShapeModel& model, const ShapeCoefficients& c,
                              const std::vector<int>& active_modes) {
    const std::size_t nv = model.vertex_count();
    CorrespondedShape out = model.mean;
    for (int k : active_modes) {
        if (k < 0 || k >= model.mode_count())
            throw NumericError("reconstruct: invalid mode index " + std::to_string(k));
        double bk = k < static_cast<int>(c.b.size()) ? c.b[k] : 0.0;
        if (bk == 0.0) continue;
        for (std::size_t i = 0; i < nv; ++i) out[i] += model.modes[k][i] * bk;
    }
    for (auto& p : out) p = c.similarity.apply(p);
    return out;
}

CorrespondedShape reconstruct(const ShapeModel& model, const ShapeCoefficients& c) {
    std::vector<int> all(model.mode_count());
    for (int k = 0; k < model.mode_count(); ++k) all[k] = k;
    return reconstruct(model, c, all);
}

std::vector<double> project_coefficients(const ShapeModel& model,
                                         const CorrespondedShape& shape) {
    std::vector<double> b(model.mode_count(), 0.0);
    for (int k = 0; k < model.mode_count(); ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < model.vertex_count(); ++i)
            acc += model.focus_weights[i] * dot(shape[i] - model.mean[i], model.modes[k][i]);
        b[k] = acc;
    }
    return b;
}

double shape_rms(const CorrespondedShape& a, const CorrespondedShape& b,
                 const std::vector<double>& weights) {
    double acc = 0.0, wsum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += weights[i] * norm2(a[i] - b[i]);
        wsum += weights[i];
    }
    return wsum > 0 ? std::sqrt(acc / wsum) : 0.0;
}

namespace {

struct SingleFit {
    ShapeCoefficients coeffs;
    double residual_rms = std::numeric_limits<double>::max();
    bool diverged = false;
};

SingleFit fit_single(const ShapeModel& model, const SpatialIndex& index, const Similarity& start,
                     const FitOptions& opts) {
    const std::size_t nv = model.vertex_count();
    const auto& w = model.focus_weights;
    double wsum = 0.0;
    for (double wi : w) wsum += wi;

    SingleFit fit;
    fit.coeffs.b.assign(model.mode_count(), 0.0);
    fit.coeffs.similarity = start;

    CorrespondedShape model_shape = reconstruct(model, fit.coeffs);
    CorrespondedShape targets(nv);
    double prev_residual = std::numeric_limits<double>::max();
    int rising = 0;

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        double res_acc = 0.0;
        for (std::size_t i = 0; i < nv; ++i) {
            ClosestPointResult cp = index.closest_point(model_shape[i]);
            targets[i] = cp.point;
            res_acc += w[i] * cp.dist2;
        }
        double residual = std::sqrt(res_acc / wsum);
        if (residual > prev_residual) {
            if (++rising >= 10) {
                fit.diverged = true;
                fit.residual_rms = residual;
                return fit;
            }
        } else {
            rising = 0;
        }
        prev_residual = residual;

        // Similarity from the model-frame shape onto the targets.
        CorrespondedShape local(nv);
        for (std::size_t i = 0; i < nv; ++i)
            local[i] = model.mean[i];
        for (int k = 0; k < model.mode_count(); ++k) {
            if (fit.coeffs.b[k] == 0.0) continue;
            for (std::size_t i = 0; i < nv; ++i) local[i] += model.modes[k][i] * fit.coeffs.b[k];
        }
        fit.coeffs.similarity = weighted_umeyama(local, targets, w);

        // Mode projection of the pulled-back residual, then the clamp.
        CorrespondedShape pulled(nv);
        for (std::size_t i = 0; i < nv; ++i)
            pulled[i] = fit.coeffs.similarity.apply_inverse(targets[i]);
        std::vector<double> b = project_coefficients(model, pulled);
        for (int k = 0; k < model.mode_count(); ++k) {
            double limit = opts.clamp_sigmas * std::sqrt(model.variances[k]);
            fit.coeffs.b[k] = std::clamp(b[k], -limit, limit);
        }

        CorrespondedShape next = reconstruct(model, fit.coeffs);
        double change_acc = 0.0;
        for (std::size_t i = 0; i < nv; ++i) change_acc += norm2(next[i] - model_shape[i]);
        double change = std::sqrt(change_acc / static_cast<double>(nv));
        model_shape = std::move(next);
        if (change < opts.tolerance_mm) break;
    }

    double res_acc = 0.0;
    for (std::size_t i = 0; i < nv; ++i)
        res_acc += w[i] * index.closest_point(model_shape[i]).dist2;
    fit.residual_rms = std::sqrt(res_acc / wsum);
    return fit;
}

}  // namespace

FitResult fit_to_surface(const ShapeModel& model, const TriangleMesh& target,
                         const Similarity& init, const FitOptions& opts) {
    if (!target.is_watertight())
        throw NumericError("fit_to_surface: target mesh is not watertight");
    if (init.scale <= 0) throw NumericError("fit_to_surface: init scale must be > 0");
    if (model.mode_count() == 0 && model.vertex_count() == 0)
        throw NumericError("fit_to_surface: empty model");

    SpatialIndex index(target);

    // Multi-start: identity plus small model-frame perturbations, composed
    // on the model side so fitting stays similarity-equivariant.
    std::vector<Similarity> starts{init};
    if (opts.starts > 1) {
        Similarity p1;
        p1.rotation = Quaternion::from_axis_angle({1, 0.3, 0.1}, 0.05);
        p1.scale = 1.04;
        starts.push_back(init.compose(p1));
    }
    if (opts.starts > 2) {
        Similarity p2;
        p2.rotation = Quaternion::from_axis_angle({-0.2, 1, 0.4}, -0.05);
        p2.scale = 0.96;
        starts.push_back(init.compose(p2));
    }

    SingleFit best;
    bool all_diverged = true;
    for (auto& s : starts) {
        SingleFit f = fit_single(model, index, s, opts);
        if (!f.diverged) all_diverged = false;
        if (f.residual_rms < best.residual_rms) best = f;
    }
    if (all_diverged) throw NumericError("fit_to_surface: diverged from every start");

    FitResult result;
    result.coefficients = best.coeffs;
    result.fitted = reconstruct(model, best.coeffs);
    result.residual_rms = best.residual_rms;
    result.quality_gate_passed = best.residual_rms <= opts.gate_mm;
    return result;
}

CorrespondedShape simulate_healthy(const ShapeModel& model, const FitResult& fit) {
    std::vector<int> active;
    for (int k = 0; k < model.mode_count(); ++k)
        if (std::find(model.excluded_modes.begin(), model.excluded_modes.end(), k) ==
            model.excluded_modes.end())
            active.push_back(k);
    return reconstruct(model, fit.coefficients, active);
}

std::vector<int> flag_cam_modes(const ShapeModel& model, const std::vector<int>& roi,
                                double energy_threshold) {
    if (roi.empty()) throw NumericError("flag_cam_modes: empty roi");
    if (energy_threshold <= 0 || energy_threshold >= 1)
        throw NumericError("flag_cam_modes: threshold must lie strictly in (0, 1)");
    std::vector<char> in_roi(model.vertex_count(), 0);
    for (int i : roi) {
        if (i < 0 || static_cast<std::size_t>(i) >= model.vertex_count())
            throw NumericError("flag_cam_modes: roi index out of range");
        in_roi[i] = 1;
    }

    std::vector<int> flagged;
    for (int k = 0; k < model.mode_count(); ++k) {
        double inside = 0.0, total = 0.0;
        for (std::size_t i = 0; i < model.vertex_count(); ++i) {
            double e = model.focus_weights[i] * norm2(model.modes[k][i]);
            total += e;
            if (in_roi[i]) inside += e;
        }
        if (total > 0 && inside / total > energy_threshold) flagged.push_back(k);
    }
    return flagged;
}

}  // namespace cammorph
