#ifndef VOLWINDOW_SWINFER_HPP
#define VOLWINDOW_SWINFER_HPP

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "volwindow/kernels.hpp"
#include "volwindow/tensor.hpp"
#include "volwindow/volume.hpp"

namespace volwindow {

struct Tile {
    std::array<int, 3> start{};
    std::array<int, 3> end{}; // exclusive
};

struct TilePlan {
    std::array<int, 3> roi{128, 128, 128};
    double overlap = 0.75;
    std::vector<Tile> tiles;            // lexicographic in (z, y, x) start
    std::array<int, 3> padded_shape{};  // == volume shape unless any dim < roi
};

// Per axis: step = max(1, floor(roi*(1-overlap))), starts 0, step, 2*step, ...
// with the last start clamped to dim-roi (duplicates removed). Axes smaller
// than the ROI are zero-padded symmetrically to it.
TilePlan plan_tiles(std::array<int, 3> volume_shape, std::array<int, 3> roi, double overlap);

enum class BlendKind { constant, gaussian };

struct BlendMode {
    BlendKind kind = BlendKind::gaussian;
    double sigma_scale = 0.125;
};

// w(x) = exp(-1/2 sum(((x_i - c_i)/sigma_i)^2)), c = (roi-1)/2,
// sigma = sigma_scale * roi, floor-clamped to max(w) * 1e-3 so every voxel
// keeps nonzero weight. x-fastest layout.
std::vector<double> gaussian_importance(std::array<int, 3> roi, double sigma_scale);

// Patch -> per-channel probability contract. Must be safe to call from the
// inferer (calls may be issued for tiles in any order; see Concurrency note
// in the implementation).
using PatchPredictor = std::function<Tensor4(const Tensor4& patch)>;

// Predicts every tile, blends with the importance map into float64
// accumulators in fixed tile order, normalizes per voxel, and crops the
// padding away. Deterministic across runs and thread counts.
ProbVolume sliding_window_infer(const Volume& volume, const PatchPredictor& predictor,
                                std::array<int, 3> roi, double overlap, BlendMode blend,
                                ExecMode exec = ExecMode::parallel);

// Per-voxel channel argmax; ties go to the lowest channel (background).
MaskVolume argmax_mask(const ProbVolume& probs);

enum class VoteMode { mean_probability, majority_label };

// Equal-weight ensemble combination: mean of the per-model probability
// fields then argmax (default), or a hard majority vote over per-model
// argmax labels.
MaskVolume ensemble_vote(std::span<const ProbVolume> models,
                         VoteMode mode = VoteMode::mean_probability);

} // namespace volwindow

#endif
