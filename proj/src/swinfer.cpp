#include "volwindow/swinfer.hpp"

#include <algorithm>
#include <cmath>

#include "volwindow/errors.hpp"

namespace volwindow {

namespace {

std::vector<int> axis_starts(int dim, int roi, double overlap) {
    const int step = std::max(1, static_cast<int>(std::floor(roi * (1.0 - overlap))));
    const int last = dim - roi;
    const int scans = last == 0 ? 1 : (last + step - 1) / step + 1;
    std::vector<int> starts;
    starts.reserve(scans);
    for (int i = 0; i < scans; ++i) {
        int s = std::min(i * step, last);
        if (starts.empty() || starts.back() != s) starts.push_back(s);
    }
    return starts;
}

} // namespace

TilePlan plan_tiles(std::array<int, 3> volume_shape, std::array<int, 3> roi, double overlap) {
    if (!(overlap >= 0.0 && overlap < 1.0))
        throw argument_error("plan_tiles: overlap must be in [0, 1)");
    for (int a = 0; a < 3; ++a) {
        if (roi[a] < 1) throw argument_error("plan_tiles: roi extents must be positive");
        if (volume_shape[a] < 1)
            throw argument_error("plan_tiles: volume extents must be positive");
    }

    TilePlan plan;
    plan.roi = roi;
    plan.overlap = overlap;
    for (int a = 0; a < 3; ++a) plan.padded_shape[a] = std::max(volume_shape[a], roi[a]);

    std::array<std::vector<int>, 3> starts;
    for (int a = 0; a < 3; ++a) starts[a] = axis_starts(plan.padded_shape[a], roi[a], overlap);

    for (int sz : starts[2])
        for (int sy : starts[1])
            for (int sx : starts[0])
                plan.tiles.push_back(
                    {{sx, sy, sz}, {sx + roi[0], sy + roi[1], sz + roi[2]}});
    return plan;
}

std::vector<double> gaussian_importance(std::array<int, 3> roi, double sigma_scale) {
    if (!(sigma_scale > 0.0)) throw argument_error("gaussian_importance: sigma_scale must be > 0");
    for (int a = 0; a < 3; ++a)
        if (roi[a] < 1) throw argument_error("gaussian_importance: roi extents must be positive");

    std::array<std::vector<double>, 3> axis; // -((x-c)/sigma)^2 / 2 per axis
    for (int a = 0; a < 3; ++a) {
        const double c = (roi[a] - 1) / 2.0;
        const double sigma = sigma_scale * roi[a];
        axis[a].resize(roi[a]);
        for (int i = 0; i < roi[a]; ++i) {
            const double d = (i - c) / sigma;
            axis[a][i] = -0.5 * d * d;
        }
    }
    std::vector<double> w(static_cast<std::size_t>(roi[0]) * roi[1] * roi[2]);
    double peak = 0.0;
    std::size_t i = 0;
    for (int z = 0; z < roi[2]; ++z)
        for (int y = 0; y < roi[1]; ++y)
            for (int x = 0; x < roi[0]; ++x, ++i) {
                w[i] = std::exp(axis[0][x] + axis[1][y] + axis[2][z]);
                peak = std::max(peak, w[i]);
            }
    const double floor_w = peak * 1e-3;
    for (auto& v : w) v = std::max(v, floor_w);
    return w;
}

ProbVolume sliding_window_infer(const Volume& volume, const PatchPredictor& predictor,
                                std::array<int, 3> roi, double overlap, BlendMode blend,
                                ExecMode exec) {
    volume.validate();
    const TilePlan plan = plan_tiles(volume.shape, roi, overlap);
    const auto& padded = plan.padded_shape;

    // symmetric zero padding for axes smaller than the ROI
    std::array<int, 3> pad{};
    for (int a = 0; a < 3; ++a) pad[a] = (padded[a] - volume.shape[a]) / 2;
    const bool needs_pad = padded != volume.shape;
    std::vector<float> padded_data;
    const float* src = volume.data.data();
    if (needs_pad) {
        padded_data.assign(static_cast<std::size_t>(padded[0]) * padded[1] * padded[2], 0.0f);
        for (int z = 0; z < volume.shape[2]; ++z)
            for (int y = 0; y < volume.shape[1]; ++y) {
                const float* in_row = volume.data.data() + volume.index(0, y, z);
                float* out_row =
                    padded_data.data() + (pad[0] +
                                          static_cast<std::int64_t>(padded[0]) *
                                              ((y + pad[1]) +
                                               static_cast<std::int64_t>(padded[1]) * (z + pad[2])));
                std::copy(in_row, in_row + volume.shape[0], out_row);
            }
        src = padded_data.data();
    }

    const std::vector<double> weights =
        blend.kind == BlendKind::gaussian
            ? gaussian_importance(roi, blend.sigma_scale)
            : std::vector<double>(static_cast<std::size_t>(roi[0]) * roi[1] * roi[2], 1.0);

    const std::int64_t padded_voxels =
        static_cast<std::int64_t>(padded[0]) * padded[1] * padded[2];

    int channels = -1;
    std::vector<double> sum;
    std::vector<double> wsum(static_cast<std::size_t>(padded_voxels), 0.0);

    // Tiles are accumulated strictly in plan order so the per-voxel addition
    // sequence is fixed; within a tile each voxel is touched once, so the
    // OpenMP path is schedule-independent.
    Tensor4 patch(1, roi);
    for (const Tile& tile : plan.tiles) {
        for (int z = 0; z < roi[2]; ++z)
            for (int y = 0; y < roi[1]; ++y) {
                const float* in_row =
                    src + (tile.start[0] +
                           static_cast<std::int64_t>(padded[0]) *
                               ((tile.start[1] + y) +
                                static_cast<std::int64_t>(padded[1]) * (tile.start[2] + z)));
                float* out_row = patch.data.data() +
                                 (static_cast<std::int64_t>(z) * roi[1] + y) * roi[0];
                std::copy(in_row, in_row + roi[0], out_row);
            }

        Tensor4 pred = predictor(patch);
        if (pred.shape != roi)
            throw contract_error("predictor returned a patch of the wrong spatial shape");
        if (pred.channels < 1)
            throw contract_error("predictor returned no channels");
        if (channels < 0) {
            channels = pred.channels;
            sum.assign(static_cast<std::size_t>(channels) * padded_voxels, 0.0);
        } else if (pred.channels != channels) {
            throw contract_error("predictor changed its channel count between tiles");
        }

        if (exec == ExecMode::serial)
            kernels::accumulate_tile_ref(pred, weights, tile.start, padded, sum.data(),
                                         wsum.data());
        else
            kernels::accumulate_tile_omp(pred, weights, tile.start, padded, sum.data(),
                                         wsum.data());
    }

    for (std::int64_t v = 0; v < padded_voxels; ++v)
        if (!(wsum[v] > 0.0))
            throw error("sliding_window_infer: zero stitch weight (internal invariant)");

    ProbVolume out;
    out.spacing = volume.spacing;
    out.affine = volume.affine;
    out.orientation_code = volume.orientation_code;
    out.probs = Tensor4(channels, volume.shape);
    for (int c = 0; c < channels; ++c) {
        const double* s = sum.data() + static_cast<std::int64_t>(c) * padded_voxels;
        float* dst = out.probs.channel(c);
        std::int64_t i = 0;
        for (int z = 0; z < volume.shape[2]; ++z)
            for (int y = 0; y < volume.shape[1]; ++y)
                for (int x = 0; x < volume.shape[0]; ++x, ++i) {
                    const std::int64_t pi =
                        (x + pad[0]) +
                        static_cast<std::int64_t>(padded[0]) *
                            ((y + pad[1]) + static_cast<std::int64_t>(padded[1]) * (z + pad[2]));
                    dst[i] = static_cast<float>(s[pi] / wsum[pi]);
                }
    }
    return out;
}

MaskVolume argmax_mask(const ProbVolume& probs) {
    if (probs.probs.channels < 2)
        throw argument_error("argmax_mask: need at least two channels");
    MaskVolume mask;
    mask.shape = probs.probs.shape;
    mask.spacing = probs.spacing;
    mask.affine = probs.affine;
    mask.orientation_code = probs.orientation_code;
    mask.data.resize(static_cast<std::size_t>(mask.voxels()));
    const std::int64_t n = probs.probs.spatial_size();
    for (std::int64_t v = 0; v < n; ++v) {
        int best = 0;
        float best_p = probs.probs.data[v];
        for (int c = 1; c < probs.probs.channels; ++c) {
            const float p = probs.probs.data[c * n + v];
            if (p > best_p) { // strict: ties stay at the lower channel
                best_p = p;
                best = c;
            }
        }
        mask.data[v] = static_cast<std::uint8_t>(best);
    }
    return mask;
}

MaskVolume ensemble_vote(std::span<const ProbVolume> models, VoteMode mode) {
    if (models.empty()) throw argument_error("ensemble_vote: empty model list");
    const auto& first = models.front();
    for (const auto& m : models)
        if (m.probs.shape != first.probs.shape || m.probs.channels != first.probs.channels)
            throw argument_error("ensemble_vote: probability volumes have mismatched shapes");

    if (mode == VoteMode::majority_label) {
        const std::int64_t n = first.probs.spatial_size();
        std::vector<MaskVolume> masks;
        masks.reserve(models.size());
        for (const auto& m : models) masks.push_back(argmax_mask(m));
        MaskVolume out = masks.front();
        std::vector<int> counts(first.probs.channels);
        for (std::int64_t v = 0; v < n; ++v) {
            std::fill(counts.begin(), counts.end(), 0);
            for (const auto& m : masks) ++counts[m.data[v]];
            int best = 0;
            for (int c = 1; c < first.probs.channels; ++c)
                if (counts[c] > counts[best]) best = c;
            out.data[v] = static_cast<std::uint8_t>(best);
        }
        return out;
    }

    ProbVolume mean;
    mean.spacing = first.spacing;
    mean.affine = first.affine;
    mean.orientation_code = first.orientation_code;
    mean.probs = Tensor4(first.probs.channels, first.probs.shape);
    const double inv = 1.0 / static_cast<double>(models.size());
    for (std::size_t i = 0; i < mean.probs.data.size(); ++i) {
        double acc = 0.0;
        for (const auto& m : models) acc += m.probs.data[i];
        mean.probs.data[i] = static_cast<float>(acc * inv);
    }
    return argmax_mask(mean);
}

} // namespace volwindow
