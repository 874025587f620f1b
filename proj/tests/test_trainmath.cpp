#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "volwindow/rng.hpp"
#include "volwindow/trainmath.hpp"

using namespace volwindow;

namespace {

struct Instance {
    std::vector<double> logits;
    std::vector<double> target;
    int channels;
    int n;
};

Instance random_instance(CounterRng& rng, int channels, int n) {
    Instance inst;
    inst.channels = channels;
    inst.n = n;
    inst.logits.resize(static_cast<std::size_t>(channels) * n);
    inst.target.assign(inst.logits.size(), 0.0);
    for (auto& z : inst.logits) z = rng.normal() * 2.0;
    for (int v = 0; v < n; ++v)
        inst.target[rng.uniform_below(static_cast<std::uint64_t>(channels)) * n + v] = 1.0;
    return inst;
}

double fd_check(const Instance& inst, const LossConfig& cfg) {
    const auto grad = dice_ce_grad(inst.logits, inst.target, inst.channels, cfg);
    std::vector<double> z = inst.logits;
    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double keep = z[i];
        z[i] = keep + h;
        const double lp = dice_ce_loss(z, inst.target, inst.channels, cfg);
        z[i] = keep - h;
        const double lm = dice_ce_loss(z, inst.target, inst.channels, cfg);
        z[i] = keep;
        const double fd = (lp - lm) / (2.0 * h);
        const double rel =
            std::abs(grad[i] - fd) / std::max({std::abs(grad[i]), std::abs(fd), 1e-3});
        worst = std::max(worst, rel);
    }
    return worst;
}

} // namespace

TEST_CASE("perfect high-margin predictions sit at the smooth-limited minimum") {
    const int n = 4;
    std::vector<double> logits(2 * n), target(2 * n, 0.0);
    // voxels 0,1 -> class 0; voxels 2,3 -> class 1; margin 50
    for (int v = 0; v < n; ++v) {
        const int cls = v < 2 ? 0 : 1;
        target[cls * n + v] = 1.0;
        logits[cls * n + v] = 25.0;
        logits[(1 - cls) * n + v] = -25.0;
    }
    const LossConfig cfg;
    CHECK(dice_ce_loss(logits, target, 2, cfg) < 1e-4);
    const auto grad = dice_ce_grad(logits, target, 2, cfg);
    for (double g : grad) CHECK(std::abs(g) < 1e-6);
}

TEST_CASE("uniform logits, one voxel of class 1: closed-form value") {
    const std::vector<double> logits{0.0, 0.0};
    const std::vector<double> target{0.0, 1.0};
    const LossConfig cfg;
    const LossParts parts = dice_ce_parts(logits, target, 2, cfg);

    CHECK(parts.ce == doctest::Approx(std::log(2.0)).epsilon(1e-9));

    // independent mini-oracle with p = (0.5, 0.5)
    const double r0 = (2.0 * 0.5 * 0.0 + 1e-5) / (0.25 + 0.0 + 1e-5);
    const double r1 = (2.0 * 0.5 * 1.0 + 1e-5) / (0.25 + 1.0 + 1e-5);
    const double dice = 1.0 - (r0 + r1) / 2.0;
    CHECK(parts.dice == doctest::Approx(dice).epsilon(1e-12));
    CHECK(parts.dice == doctest::Approx(0.59997920080636802).epsilon(1e-9));
    CHECK(dice_ce_loss(logits, target, 2, cfg) ==
          doctest::Approx(1.2931263813663132).epsilon(1e-9));
}

TEST_CASE("loss is invariant under voxel permutations") {
    CounterRng rng(3);
    Instance inst = random_instance(rng, 2, 12);
    const LossConfig cfg;
    const double base = dice_ce_loss(inst.logits, inst.target, 2, cfg);

    std::vector<int> perm(inst.n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = inst.n - 1; i > 0; --i)
        std::swap(perm[i], perm[rng.uniform_below(static_cast<std::uint64_t>(i + 1))]);

    std::vector<double> pl(inst.logits.size()), pt(inst.target.size());
    for (int c = 0; c < 2; ++c)
        for (int v = 0; v < inst.n; ++v) {
            pl[c * inst.n + v] = inst.logits[c * inst.n + perm[v]];
            pt[c * inst.n + v] = inst.target[c * inst.n + perm[v]];
        }
    CHECK(dice_ce_loss(pl, pt, 2, cfg) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("analytic gradient matches central differences on a random 2x8 instance") {
    CounterRng rng(17);
    Instance inst = random_instance(rng, 2, 8);
    CHECK(fd_check(inst, LossConfig{}) < 1e-6);
}

TEST_CASE("gradient check across config variants and sizes") {
    CounterRng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        const int channels = 2 + static_cast<int>(rng.uniform_below(2));
        const int n = 1 + static_cast<int>(rng.uniform_below(16));
        Instance inst = random_instance(rng, channels, n);

        LossConfig cfg;
        cfg.squared_pred = trial % 2 == 0;
        cfg.include_background = trial % 3 != 0;
        cfg.ce_weight = trial % 4 == 0 ? 0.5 : 1.0;
        CHECK(fd_check(inst, cfg) < 1e-5);
    }
}

TEST_CASE("CE gradient components sum to zero per voxel") {
    CounterRng rng(7);
    Instance inst = random_instance(rng, 3, 6);
    const auto grad = cross_entropy_grad(inst.logits, inst.target, 3);
    for (int v = 0; v < inst.n; ++v) {
        double sum = 0.0;
        for (int c = 0; c < 3; ++c) sum += grad[c * inst.n + v];
        CHECK(std::abs(sum) < 1e-15);
    }
}

TEST_CASE("non-one-hot targets are rejected") {
    const std::vector<double> logits{0.0, 0.0};
    const LossConfig cfg;
    SUBCASE("fractional value") {
        const std::vector<double> target{0.5, 0.5};
        CHECK_THROWS_AS(dice_ce_loss(logits, target, 2, cfg), argument_error);
    }
    SUBCASE("two ones") {
        const std::vector<double> target{1.0, 1.0};
        CHECK_THROWS_AS(dice_ce_loss(logits, target, 2, cfg), argument_error);
    }
    SUBCASE("no ones") {
        const std::vector<double> target{0.0, 0.0};
        CHECK_THROWS_AS(dice_ce_loss(logits, target, 2, cfg), argument_error);
    }
    SUBCASE("single channel") {
        CHECK_THROWS_AS(dice_ce_loss(std::vector<double>{0.0}, std::vector<double>{1.0}, 1, cfg),
                        argument_error);
    }
}

TEST_CASE("loss is non-negative and decreases along the negative gradient") {
    CounterRng rng(41);
    const LossConfig cfg;
    for (int trial = 0; trial < 10; ++trial) {
        Instance inst = random_instance(rng, 2, 8);
        const double base = dice_ce_loss(inst.logits, inst.target, 2, cfg);
        CHECK(base >= 0.0);

        const auto grad = dice_ce_grad(inst.logits, inst.target, 2, cfg);
        double norm = 0.0;
        for (double g : grad) norm += g * g;
        norm = std::sqrt(norm);
        if (norm < 1e-10) continue; // already at the flat minimum

        std::vector<double> stepped = inst.logits;
        const double step = 1e-3 / norm;
        for (std::size_t i = 0; i < stepped.size(); ++i) stepped[i] -= step * grad[i];
        CHECK(dice_ce_loss(stepped, inst.target, 2, cfg) < base);
    }
}

TEST_CASE("cosine annealing schedule") {
    const double eta_max = 2e-4, eta_min = 1e-8;
    SUBCASE("endpoints are exact") {
        CHECK(cosine_annealing_lr(0, 1000, eta_max, eta_min) == eta_max);
        CHECK(cosine_annealing_lr(1000, 1000, eta_max, eta_min) == eta_min);
    }
    SUBCASE("midpoint is the mean") {
        CHECK(cosine_annealing_lr(500, 1000, eta_max, eta_min) ==
              doctest::Approx((eta_max + eta_min) / 2.0).epsilon(1e-12));
        CHECK(cosine_annealing_lr(500, 1000, eta_max, eta_min) ==
              doctest::Approx(1.00005e-4).epsilon(1e-12));
    }
    SUBCASE("monotone non-increasing") {
        const std::int64_t T = 10000;
        double prev = cosine_annealing_lr(0, T, eta_max, eta_min);
        for (std::int64_t t = 1; t <= T; ++t) {
            const double cur = cosine_annealing_lr(t, T, eta_max, eta_min);
            CHECK(cur <= prev);
            prev = cur;
        }
    }
    SUBCASE("domain errors") {
        CHECK_THROWS_AS(cosine_annealing_lr(1001, 1000, eta_max, eta_min), argument_error);
        CHECK_THROWS_AS(cosine_annealing_lr(-1, 1000, eta_max, eta_min), argument_error);
        CHECK_THROWS_AS(cosine_annealing_lr(0, 0, eta_max, eta_min), argument_error);
        CHECK_THROWS_AS(cosine_annealing_lr(0, 10, eta_min, eta_max), argument_error);
    }
}
