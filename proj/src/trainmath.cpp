#include "volwindow/trainmath.hpp"

#include <cmath>

namespace volwindow {

namespace {

struct Prepared {
    std::int64_t n = 0;            // voxels
    std::vector<double> p;         // softmax, C x N
    std::vector<double> lse;       // per-voxel log-sum-exp
};

void check_inputs(std::span<const double> logits, std::span<const double> target, int channels) {
    if (channels < 2) throw argument_error("loss: need at least two channels");
    if (logits.size() != target.size() || logits.empty())
        throw argument_error("loss: logits and target sizes differ or are empty");
    if (logits.size() % static_cast<std::size_t>(channels) != 0)
        throw argument_error("loss: array size is not a multiple of the channel count");
    const std::int64_t n = static_cast<std::int64_t>(logits.size()) / channels;
    for (std::int64_t v = 0; v < n; ++v) {
        int ones = 0;
        for (int c = 0; c < channels; ++c) {
            const double g = target[c * n + v];
            if (g != 0.0 && g != 1.0)
                throw argument_error("loss: target is not one-hot (value not in {0,1})");
            if (g == 1.0) ++ones;
        }
        if (ones != 1) throw argument_error("loss: target is not one-hot (row sum != 1)");
    }
}

Prepared softmax_prepare(std::span<const double> logits, int channels) {
    Prepared out;
    out.n = static_cast<std::int64_t>(logits.size()) / channels;
    out.p.resize(logits.size());
    out.lse.resize(static_cast<std::size_t>(out.n));
    for (std::int64_t v = 0; v < out.n; ++v) {
        double m = logits[v];
        for (int c = 1; c < channels; ++c) m = std::max(m, logits[c * out.n + v]);
        double denom = 0.0;
        for (int c = 0; c < channels; ++c) denom += std::exp(logits[c * out.n + v] - m);
        out.lse[v] = m + std::log(denom);
        for (int c = 0; c < channels; ++c)
            out.p[c * out.n + v] = std::exp(logits[c * out.n + v] - out.lse[v]);
    }
    return out;
}

struct DiceChannel {
    double num = 0.0; // 2*intersection + smooth_num
    double den = 0.0; // sum(p^2) + sum(g^2) + smooth_den (or plain sums)
};

std::vector<DiceChannel> dice_channels(const Prepared& s, std::span<const double> target,
                                       int channels, const LossConfig& cfg) {
    std::vector<DiceChannel> ch(channels);
    for (int c = 0; c < channels; ++c) {
        double inter = 0.0, psum = 0.0, gsum = 0.0;
        for (std::int64_t v = 0; v < s.n; ++v) {
            const double p = s.p[c * s.n + v];
            const double g = target[c * s.n + v];
            inter += p * g;
            psum += cfg.squared_pred ? p * p : p;
            gsum += cfg.squared_pred ? g * g : g;
        }
        ch[c].num = 2.0 * inter + cfg.smooth_num;
        ch[c].den = psum + gsum + cfg.smooth_den;
    }
    return ch;
}

} // namespace

LossParts dice_ce_parts(std::span<const double> logits, std::span<const double> target,
                        int channels, const LossConfig& cfg) {
    cfg.validate();
    check_inputs(logits, target, channels);
    const Prepared s = softmax_prepare(logits, channels);

    const auto ch = dice_channels(s, target, channels, cfg);
    const int c0 = cfg.include_background ? 0 : 1;
    double ratio_sum = 0.0;
    for (int c = c0; c < channels; ++c) ratio_sum += ch[c].num / ch[c].den;
    LossParts parts;
    parts.dice = 1.0 - ratio_sum / static_cast<double>(channels - c0);

    double ce = 0.0;
    for (std::int64_t v = 0; v < s.n; ++v)
        for (int c = 0; c < channels; ++c)
            if (target[c * s.n + v] == 1.0) ce += s.lse[v] - logits[c * s.n + v];
    parts.ce = ce / static_cast<double>(s.n);
    return parts;
}

double dice_ce_loss(std::span<const double> logits, std::span<const double> target, int channels,
                    const LossConfig& cfg) {
    const LossParts parts = dice_ce_parts(logits, target, channels, cfg);
    return parts.dice + cfg.ce_weight * parts.ce;
}

std::vector<double> cross_entropy_grad(std::span<const double> logits,
                                       std::span<const double> target, int channels) {
    check_inputs(logits, target, channels);
    const Prepared s = softmax_prepare(logits, channels);
    std::vector<double> grad(logits.size());
    const double inv_n = 1.0 / static_cast<double>(s.n);
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = (s.p[i] - target[i]) * inv_n;
    return grad;
}

std::vector<double> dice_ce_grad(std::span<const double> logits, std::span<const double> target,
                                 int channels, const LossConfig& cfg) {
    cfg.validate();
    check_inputs(logits, target, channels);
    const Prepared s = softmax_prepare(logits, channels);
    const auto ch = dice_channels(s, target, channels, cfg);
    const int c0 = cfg.include_background ? 0 : 1;
    const double inv_channels = 1.0 / static_cast<double>(channels - c0);

    // d(dice)/dp, then chain through the softmax Jacobian per voxel
    std::vector<double> dLdp(logits.size(), 0.0);
    for (int c = c0; c < channels; ++c) {
        const double num = ch[c].num, den = ch[c].den;
        for (std::int64_t v = 0; v < s.n; ++v) {
            const double p = s.p[c * s.n + v];
            const double g = target[c * s.n + v];
            const double dpsum = cfg.squared_pred ? 2.0 * p : 1.0;
            const double dratio = (2.0 * g * den - num * dpsum) / (den * den);
            dLdp[c * s.n + v] = -inv_channels * dratio;
        }
    }

    std::vector<double> grad(logits.size());
    const double inv_n = 1.0 / static_cast<double>(s.n);
    for (std::int64_t v = 0; v < s.n; ++v) {
        double dot = 0.0;
        for (int c = 0; c < channels; ++c) dot += dLdp[c * s.n + v] * s.p[c * s.n + v];
        for (int c = 0; c < channels; ++c) {
            const double p = s.p[c * s.n + v];
            const double dice_part = p * (dLdp[c * s.n + v] - dot);
            const double ce_part = (p - target[c * s.n + v]) * inv_n;
            grad[c * s.n + v] = dice_part + cfg.ce_weight * ce_part;
        }
    }
    return grad;
}

double cosine_annealing_lr(std::int64_t t, std::int64_t total_steps, double eta_max,
                           double eta_min) {
    if (total_steps < 1) throw argument_error("cosine_annealing_lr: T must be >= 1");
    if (t < 0 || t > total_steps)
        throw argument_error("cosine_annealing_lr: step index outside [0, T]");
    if (eta_min > eta_max) throw argument_error("cosine_annealing_lr: eta_min > eta_max");
    const double w =
        (1.0 + std::cos(M_PI * static_cast<double>(t) / static_cast<double>(total_steps))) / 2.0;
    // convex-combination form keeps both endpoints exact
    return eta_max * w + eta_min * (1.0 - w);
}

} // namespace volwindow
