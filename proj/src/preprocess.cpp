#include "volwindow/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "volwindow/errors.hpp"
#include "volwindow/log.hpp"

namespace volwindow {

namespace {

// Voxel-axis -> world-axis assignment of the affine's direction columns:
// axis_of[w] is the voxel axis dominating world axis w, sign_of[w] its sign.
struct AxisMap {
    std::array<int, 3> axis_of;
    std::array<double, 3> sign_of;
};

AxisMap dominant_axes(const Mat4& affine) {
    if (std::abs(affine_det3(affine)) < 1e-12)
        throw geometry_error("reorient_to_ras: affine direction matrix is singular");
    double dir[3][3];
    for (int c = 0; c < 3; ++c) {
        double n = affine_column_norm(affine, c);
        for (int r = 0; r < 3; ++r) dir[r][c] = affine[r][c] / n;
    }
    AxisMap map{};
    bool row_used[3] = {false, false, false};
    bool col_used[3] = {false, false, false};
    for (int step = 0; step < 3; ++step) {
        int br = -1, bc = -1;
        double best = -1.0;
        for (int r = 0; r < 3; ++r) {
            if (row_used[r]) continue;
            for (int c = 0; c < 3; ++c) {
                if (col_used[c]) continue;
                if (std::abs(dir[r][c]) > best) {
                    best = std::abs(dir[r][c]);
                    br = r;
                    bc = c;
                }
            }
        }
        row_used[br] = true;
        col_used[bc] = true;
        map.axis_of[br] = bc;
        map.sign_of[br] = dir[br][bc] >= 0.0 ? 1.0 : -1.0;
    }
    return map;
}

template <typename T>
Grid<T> reorient_impl(const Grid<T>& g) {
    g.validate();
    AxisMap map = dominant_axes(g.affine);

    bool identity = true;
    for (int w = 0; w < 3; ++w)
        if (map.axis_of[w] != w || map.sign_of[w] < 0.0) identity = false;
    if (identity) {
        Grid<T> out = g;
        out.orientation_code = "RAS";
        return out;
    }

    Grid<T> out;
    for (int w = 0; w < 3; ++w) {
        out.shape[w] = g.shape[map.axis_of[w]];
        out.spacing[w] = g.spacing[map.axis_of[w]];
    }
    out.data.resize(static_cast<std::size_t>(out.voxels()));
    out.orientation_code = "RAS";

    // index transform: old_idx[axis_of[w]] = flip ? n-1-new_idx[w] : new_idx[w]
    Mat4 t{};
    t[3][3] = 1.0;
    for (int w = 0; w < 3; ++w) {
        int a = map.axis_of[w];
        if (map.sign_of[w] >= 0.0) {
            t[a][w] = 1.0;
        } else {
            t[a][w] = -1.0;
            t[a][3] = g.shape[a] - 1.0;
        }
    }
    out.affine = mat4_mul(g.affine, t);

    std::array<int, 3> old_idx{};
    for (int z = 0; z < out.shape[2]; ++z)
        for (int y = 0; y < out.shape[1]; ++y)
            for (int x = 0; x < out.shape[0]; ++x) {
                const std::array<int, 3> new_idx{x, y, z};
                for (int w = 0; w < 3; ++w) {
                    int a = map.axis_of[w];
                    old_idx[a] = map.sign_of[w] >= 0.0 ? new_idx[w]
                                                       : g.shape[a] - 1 - new_idx[w];
                }
                out.at(x, y, z) = g.at(old_idx[0], old_idx[1], old_idx[2]);
            }
    out.validate();
    return out;
}

std::array<int, 3> resampled_shape(const std::array<int, 3>& shape,
                                   const std::array<double, 3>& spacing,
                                   const std::array<double, 3>& target) {
    std::array<int, 3> out{};
    for (int i = 0; i < 3; ++i) {
        if (!(target[i] > 0.0))
            throw argument_error("resample: target spacing must be strictly positive");
        out[i] = std::max<int>(1, static_cast<int>(std::llround(shape[i] * spacing[i] / target[i])));
    }
    return out;
}

Mat4 rescale_affine(const Mat4& affine, const std::array<double, 3>& scale) {
    Mat4 s = mat4_identity();
    for (int i = 0; i < 3; ++i) s[i][i] = scale[i];
    return mat4_mul(affine, s);
}

} // namespace

Volume reorient_to_ras(const Volume& v) { return reorient_impl(v); }
MaskVolume reorient_to_ras(const MaskVolume& m) { return reorient_impl(m); }

Volume resample(const Volume& v, std::array<double, 3> target_spacing, Interp mode,
                ExecMode exec) {
    v.validate();
    const std::array<int, 3> out_shape = resampled_shape(v.shape, v.spacing, target_spacing);
    std::array<double, 3> scale{};
    for (int i = 0; i < 3; ++i) scale[i] = target_spacing[i] / v.spacing[i];

    Volume out;
    out.shape = out_shape;
    out.spacing = target_spacing;
    out.affine = rescale_affine(v.affine, scale);
    out.orientation_code = v.orientation_code;
    out.data.resize(static_cast<std::size_t>(out.voxels()));

    if (mode == Interp::trilinear) {
        if (exec == ExecMode::serial)
            kernels::resample_trilinear_ref(v.data.data(), v.shape, out.data.data(), out_shape,
                                            scale);
        else
            kernels::resample_trilinear_omp(v.data.data(), v.shape, out.data.data(), out_shape,
                                            scale);
    } else {
        auto nearest = [&](int x, int y, int z) {
            int sx = std::clamp(static_cast<int>(std::llround(x * scale[0])), 0, v.shape[0] - 1);
            int sy = std::clamp(static_cast<int>(std::llround(y * scale[1])), 0, v.shape[1] - 1);
            int sz = std::clamp(static_cast<int>(std::llround(z * scale[2])), 0, v.shape[2] - 1);
            return v.at(sx, sy, sz);
        };
        for (int z = 0; z < out_shape[2]; ++z)
            for (int y = 0; y < out_shape[1]; ++y)
                for (int x = 0; x < out_shape[0]; ++x) out.at(x, y, z) = nearest(x, y, z);
    }
    out.validate();
    return out;
}

MaskVolume resample(const MaskVolume& m, std::array<double, 3> target_spacing, ExecMode) {
    m.validate();
    const std::array<int, 3> out_shape = resampled_shape(m.shape, m.spacing, target_spacing);
    std::array<double, 3> scale{};
    for (int i = 0; i < 3; ++i) scale[i] = target_spacing[i] / m.spacing[i];

    MaskVolume out;
    out.shape = out_shape;
    out.spacing = target_spacing;
    out.affine = rescale_affine(m.affine, scale);
    out.orientation_code = m.orientation_code;
    out.data.resize(static_cast<std::size_t>(out.voxels()));
    for (int z = 0; z < out_shape[2]; ++z)
        for (int y = 0; y < out_shape[1]; ++y)
            for (int x = 0; x < out_shape[0]; ++x) {
                int sx = std::clamp(static_cast<int>(std::llround(x * scale[0])), 0, m.shape[0] - 1);
                int sy = std::clamp(static_cast<int>(std::llround(y * scale[1])), 0, m.shape[1] - 1);
                int sz = std::clamp(static_cast<int>(std::llround(z * scale[2])), 0, m.shape[2] - 1);
                out.at(x, y, z) = m.at(sx, sy, sz);
            }
    out.validate();
    return out;
}

double percentile_linear(std::vector<float> values, double p) {
    if (values.empty()) throw argument_error("percentile of an empty value set");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n == 1) return values[0];
    const double rank = p / 100.0 * static_cast<double>(n - 1);
    const std::size_t i = static_cast<std::size_t>(rank);
    if (i + 1 >= n) return values[n - 1];
    const double frac = rank - static_cast<double>(i);
    return values[i] + frac * (static_cast<double>(values[i + 1]) - values[i]);
}

ScaleResult scale_intensity_percentile(const Volume& v, const PreprocessConfig& cfg) {
    cfg.validate();
    if (v.voxels() < 1) throw argument_error("scale_intensity_percentile: empty volume");

    ScaleResult res;
    res.lo = percentile_linear(v.data, cfg.lower_percentile);
    res.hi = percentile_linear(v.data, cfg.upper_percentile);
    res.volume = v;

    if (res.hi == res.lo) {
        res.degenerate = true;
        std::fill(res.volume.data.begin(), res.volume.data.end(), 0.0f);
        log_warn("degenerate intensity window (lo == hi); output forced to zeros");
        return res;
    }
    const double inv = 1.0 / (res.hi - res.lo);
    for (auto& x : res.volume.data) {
        double y = (x - res.lo) * inv;
        if (cfg.clip) y = std::clamp(y, 0.0, 1.0);
        x = static_cast<float>(y);
    }
    return res;
}

NanGuardResult nan_guard(const Volume& v) {
    NanGuardResult res;
    res.volume = v;
    for (auto& x : res.volume.data)
        if (!std::isfinite(x)) {
            x = 0.0f;
            ++res.replaced;
        }
    return res;
}

std::pair<Volume, PreprocessReport> run_preprocess(const Volume& v, const PreprocessConfig& cfg,
                                                   ExecMode exec) {
    cfg.validate();
    PreprocessReport report;

    Volume work = v;
    if (cfg.nan_guard) {
        auto guarded = nan_guard(work);
        work = std::move(guarded.volume);
        report.replaced_nans = guarded.replaced;
    }
    work = reorient_to_ras(work);
    work = resample(work, cfg.target_spacing, Interp::trilinear, exec);
    auto scaled = scale_intensity_percentile(work, cfg);
    report.lo = scaled.lo;
    report.hi = scaled.hi;
    report.degenerate = scaled.degenerate;
    report.out_shape = scaled.volume.shape;
    return {std::move(scaled.volume), report};
}

} // namespace volwindow
