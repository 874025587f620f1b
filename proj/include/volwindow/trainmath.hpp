#ifndef VOLWINDOW_TRAINMATH_HPP
#define VOLWINDOW_TRAINMATH_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "volwindow/errors.hpp"

namespace volwindow {

struct LossConfig {
    bool squared_pred = true;
    bool include_background = true;
    double smooth_num = 1e-5;
    double smooth_den = 1e-5;
    double ce_weight = 1.0; // equal Dice/CE weighting by default

    void validate() const {
        if (smooth_num < 0.0 || smooth_den < 0.0)
            throw argument_error("smoothing terms must be non-negative");
    }
};

struct LossParts {
    double dice = 0.0;
    double ce = 0.0;
};

// Soft Dice + cross-entropy over a flat voxel list. logits and
// target_onehot are channel-major (C x N, layout [c*N + n]); target rows
// must be one-hot. All arithmetic in float64.
double dice_ce_loss(std::span<const double> logits, std::span<const double> target_onehot,
                    int channels, const LossConfig& cfg);

// Dice and CE terms separately (total = dice + ce_weight * ce).
LossParts dice_ce_parts(std::span<const double> logits, std::span<const double> target_onehot,
                        int channels, const LossConfig& cfg);

// Analytic gradient of dice_ce_loss w.r.t. the logits (same C x N layout).
std::vector<double> dice_ce_grad(std::span<const double> logits,
                                 std::span<const double> target_onehot, int channels,
                                 const LossConfig& cfg);

// Gradient of the mean cross-entropy alone: (softmax(z) - g) / N.
std::vector<double> cross_entropy_grad(std::span<const double> logits,
                                       std::span<const double> target_onehot, int channels);

// eta_min + (eta_max - eta_min) * (1 + cos(pi * t / T)) / 2, exact at both
// endpoints.
double cosine_annealing_lr(std::int64_t t, std::int64_t total_steps, double eta_max,
                           double eta_min);

} // namespace volwindow

#endif
