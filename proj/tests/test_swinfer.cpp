#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <omp.h>

#include <cmath>
#include <cstring>

#include "oracles.hpp"
#include "test_util.hpp"
#include "volwindow/errors.hpp"
#include "volwindow/swinfer.hpp"

using namespace volwindow;

namespace {

// voxel-wise analytic predictor: probability of class 1 from the voxel value
double value_to_p1(double v) { return 1.0 / (1.0 + std::exp(-v / 10.0)); }

PatchPredictor analytic_predictor() {
    return [](const Tensor4& patch) {
        Tensor4 out(2, patch.shape);
        const std::int64_t n = patch.spatial_size();
        for (std::int64_t i = 0; i < n; ++i) {
            const double p1 = value_to_p1(patch.data[i]);
            out.data[i] = static_cast<float>(1.0 - p1);
            out.data[n + i] = static_cast<float>(p1);
        }
        return out;
    };
}

PatchPredictor constant_predictor(float p0, float p1) {
    return [p0, p1](const Tensor4& patch) {
        Tensor4 out(2, patch.shape);
        const std::int64_t n = patch.spatial_size();
        for (std::int64_t i = 0; i < n; ++i) {
            out.data[i] = p0;
            out.data[n + i] = p1;
        }
        return out;
    };
}

std::vector<double> oracle_stitch(const Volume& vol, std::array<int, 3> roi, double overlap,
                                  BlendMode blend) {
    return oracles::stitch(vol, roi, overlap, blend, value_to_p1);
}

} // namespace

TEST_CASE("tile plan enumerations") {
    SUBCASE("4^3 roi 2 overlap 0 has per-axis starts {0,2} and 8 tiles") {
        TilePlan p = plan_tiles({4, 4, 4}, {2, 2, 2}, 0.0);
        CHECK(p.tiles.size() == 8);
        CHECK(p.tiles.front().start == std::array<int, 3>{0, 0, 0});
        CHECK(p.tiles.back().start == std::array<int, 3>{2, 2, 2});
    }
    SUBCASE("4^3 roi 2 overlap 0.5 has starts {0,1,2} and 27 tiles") {
        TilePlan p = plan_tiles({4, 4, 4}, {2, 2, 2}, 0.5);
        CHECK(p.tiles.size() == 27);
    }
    SUBCASE("roi == shape is a single tile at any overlap") {
        for (double ov : {0.0, 0.25, 0.75, 0.99}) {
            TilePlan p = plan_tiles({5, 6, 7}, {5, 6, 7}, ov);
            CHECK(p.tiles.size() == 1);
            CHECK(p.tiles[0].start == std::array<int, 3>{0, 0, 0});
            CHECK(p.tiles[0].end == std::array<int, 3>{5, 6, 7});
        }
    }
    SUBCASE("400^3 roi 128: 64 tiles at overlap 0, 1000 at 0.75") {
        TilePlan p0 = plan_tiles({400, 400, 400}, {128, 128, 128}, 0.0);
        CHECK(p0.tiles.size() == 64);
        // per-axis starts {0,128,256,272}
        CHECK(p0.tiles[1].start == std::array<int, 3>{128, 0, 0});
        CHECK(p0.tiles[3].start == std::array<int, 3>{272, 0, 0});
        TilePlan p75 = plan_tiles({400, 400, 400}, {128, 128, 128}, 0.75);
        CHECK(p75.tiles.size() == 1000);
    }
    SUBCASE("overlap bounds") {
        CHECK_THROWS_AS(plan_tiles({4, 4, 4}, {2, 2, 2}, 1.0), argument_error);
        CHECK_THROWS_AS(plan_tiles({4, 4, 4}, {2, 2, 2}, -0.1), argument_error);
    }
}

TEST_CASE("tiles are ordered lexicographically in (z,y,x) and cover everything") {
    CounterRng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        std::array<int, 3> shape{}, roi{};
        for (int a = 0; a < 3; ++a) {
            shape[a] = 1 + static_cast<int>(rng.uniform_below(8));
            roi[a] = 1 + static_cast<int>(rng.uniform_below(4));
        }
        const double overlap = 0.25 * static_cast<double>(rng.uniform_below(4));
        TilePlan p = plan_tiles(shape, roi, overlap);

        for (std::size_t i = 1; i < p.tiles.size(); ++i) {
            const auto& a = p.tiles[i - 1].start;
            const auto& b = p.tiles[i].start;
            const auto key = [](const std::array<int, 3>& s) {
                return std::array<int, 3>{s[2], s[1], s[0]};
            };
            CHECK(key(a) < key(b));
        }

        std::vector<char> covered(
            static_cast<std::size_t>(p.padded_shape[0]) * p.padded_shape[1] * p.padded_shape[2],
            0);
        for (const auto& t : p.tiles) {
            for (int a = 0; a < 3; ++a) {
                CHECK(t.end[a] - t.start[a] == roi[a]);
                CHECK(t.start[a] >= 0);
                CHECK(t.end[a] <= p.padded_shape[a]);
            }
            for (int z = t.start[2]; z < t.end[2]; ++z)
                for (int y = t.start[1]; y < t.end[1]; ++y)
                    for (int x = t.start[0]; x < t.end[0]; ++x)
                        covered[x + static_cast<std::size_t>(p.padded_shape[0]) *
                                        (y + static_cast<std::size_t>(p.padded_shape[1]) * z)] = 1;
        }
        for (char c : covered) CHECK(c == 1);
    }
}

TEST_CASE("gaussian importance map") {
    SUBCASE("mirror symmetric with the peak at the center") {
        const std::array<int, 3> roi{6, 5, 4};
        const auto w = gaussian_importance(roi, 0.125);
        auto at = [&](int x, int y, int z) {
            return w[x + static_cast<std::size_t>(roi[0]) * (y + static_cast<std::size_t>(roi[1]) * z)];
        };
        for (int z = 0; z < roi[2]; ++z)
            for (int y = 0; y < roi[1]; ++y)
                for (int x = 0; x < roi[0]; ++x) {
                    CHECK(at(x, y, z) == at(roi[0] - 1 - x, y, z));
                    CHECK(at(x, y, z) == at(x, roi[1] - 1 - y, z));
                    CHECK(at(x, y, z) == at(x, y, roi[2] - 1 - z));
                }
        const double peak = *std::max_element(w.begin(), w.end());
        // even extents: the 2^3 central voxels share the max
        CHECK(at(2, 2, 1) == peak);
        CHECK(at(3, 2, 2) == peak);
    }
    SUBCASE("odd roi centers at exactly 1") {
        const auto w = gaussian_importance({5, 5, 5}, 0.125);
        CHECK(w[2 + 5 * (2 + 5 * 2)] == 1.0);
    }
    SUBCASE("corner clamp binds for roi 8^3 at sigma_scale 0.125") {
        // unclamped corner-to-center ratio: exp(-0.5*3*(3.5/1)^2) ~ 1.05e-8
        const double unclamped = std::exp(-0.5 * 3.0 * 3.5 * 3.5);
        CHECK(unclamped == doctest::Approx(1.0467e-8).epsilon(1e-3));
        const auto w = gaussian_importance({8, 8, 8}, 0.125);
        const double peak = *std::max_element(w.begin(), w.end());
        CHECK(unclamped < peak * 1e-3); // so the floor must bind
        CHECK(w[0] == peak * 1e-3);
    }
    SUBCASE("bad sigma") {
        CHECK_THROWS_AS(gaussian_importance({4, 4, 4}, 0.0), argument_error);
    }
}

TEST_CASE("constant predictor stitches to exactly its constant") {
    Volume v = testutil::random_volume({5, 6, 4}, {1, 1, 1}, 3);
    for (double overlap : {0.0, 0.5, 0.75})
        for (BlendKind kind : {BlendKind::constant, BlendKind::gaussian}) {
            BlendMode blend;
            blend.kind = kind;
            ProbVolume out =
                sliding_window_infer(v, constant_predictor(0.3f, 0.7f), {3, 3, 3}, overlap, blend);
            const std::int64_t n = out.probs.spatial_size();
            for (std::int64_t i = 0; i < n; ++i) {
                CHECK(out.probs.data[i] == 0.3f);
                CHECK(out.probs.data[n + i] == 0.7f);
            }
        }
}

TEST_CASE("roi == volume shape reproduces the direct predictor call bit-for-bit") {
    Volume v = testutil::random_volume({6, 5, 7}, {1, 1, 1}, 9, -30.0f, 30.0f);
    auto predictor = analytic_predictor();
    Tensor4 patch(1, v.shape);
    std::copy(v.data.begin(), v.data.end(), patch.data.begin());
    Tensor4 direct = predictor(patch);

    for (double overlap : {0.0, 0.25, 0.75}) {
        BlendMode blend; // gaussian
        ProbVolume out = sliding_window_infer(v, predictor, v.shape, overlap, blend);
        CHECK(std::memcmp(out.probs.data.data(), direct.data.data(),
                          direct.data.size() * 4) == 0);
    }
}

TEST_CASE("stitching matches the brute-force oracle") {
    SUBCASE("6^3, roi 4, overlap 0.5, gaussian") {
        Volume v = testutil::random_volume({6, 6, 6}, {1, 1, 1}, 21, -20.0f, 20.0f);
        BlendMode blend;
        ProbVolume got = sliding_window_infer(v, analytic_predictor(), {4, 4, 4}, 0.5, blend);
        const std::vector<double> want = oracle_stitch(v, {4, 4, 4}, 0.5, blend);
        const std::int64_t n = v.voxels();
        for (std::int64_t i = 0; i < 2 * n; ++i)
            CHECK(std::abs(got.probs.data[i] - want[i]) < 1e-6);
    }
    SUBCASE("volume smaller than roi gets padded and cropped") {
        Volume v = testutil::random_volume({2, 3, 2}, {1, 1, 1}, 33, -10.0f, 10.0f);
        BlendMode blend;
        ProbVolume got = sliding_window_infer(v, analytic_predictor(), {4, 4, 4}, 0.25, blend);
        CHECK(got.probs.shape == v.shape);
        const std::vector<double> want = oracle_stitch(v, {4, 4, 4}, 0.25, blend);
        const std::int64_t n = v.voxels();
        for (std::int64_t i = 0; i < 2 * n; ++i)
            CHECK(std::abs(got.probs.data[i] - want[i]) < 1e-6);
    }
}

TEST_CASE("channel sums stay within 1e-5 of one for normalized predictors") {
    Volume v = testutil::random_volume({7, 6, 5}, {1, 1, 1}, 15, -40.0f, 40.0f);
    BlendMode blend;
    ProbVolume out = sliding_window_infer(v, analytic_predictor(), {4, 4, 4}, 0.75, blend);
    const std::int64_t n = out.probs.spatial_size();
    for (std::int64_t i = 0; i < n; ++i)
        CHECK(out.probs.data[i] + out.probs.data[n + i] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("output stays inside the envelope of tile predictions") {
    Volume v = testutil::random_volume({6, 6, 6}, {1, 1, 1}, 44, -25.0f, 25.0f);
    float lo = 1.0f, hi = 0.0f;
    for (float x : v.data) {
        lo = std::min(lo, static_cast<float>(value_to_p1(x)));
        hi = std::max(hi, static_cast<float>(value_to_p1(x)));
    }
    lo = std::min(lo, static_cast<float>(value_to_p1(0.0))); // padding contributes 0.5
    hi = std::max(hi, static_cast<float>(value_to_p1(0.0)));
    BlendMode blend;
    ProbVolume out = sliding_window_infer(v, analytic_predictor(), {4, 4, 4}, 0.5, blend);
    const std::int64_t n = out.probs.spatial_size();
    for (std::int64_t i = 0; i < n; ++i) {
        CHECK(out.probs.data[n + i] >= lo - 1e-6f);
        CHECK(out.probs.data[n + i] <= hi + 1e-6f);
    }
}

TEST_CASE("stitching is bit-identical across exec modes and thread counts") {
    Volume v = testutil::random_volume({8, 7, 6}, {1, 1, 1}, 70, -15.0f, 15.0f);
    BlendMode blend;
    ProbVolume serial =
        sliding_window_infer(v, analytic_predictor(), {4, 4, 4}, 0.5, blend, ExecMode::serial);

    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    ProbVolume p1 =
        sliding_window_infer(v, analytic_predictor(), {4, 4, 4}, 0.5, blend, ExecMode::parallel);
    omp_set_num_threads(4);
    ProbVolume p4 =
        sliding_window_infer(v, analytic_predictor(), {4, 4, 4}, 0.5, blend, ExecMode::parallel);
    omp_set_num_threads(saved);

    CHECK(std::memcmp(serial.probs.data.data(), p1.probs.data.data(),
                      serial.probs.data.size() * 4) == 0);
    CHECK(std::memcmp(p1.probs.data.data(), p4.probs.data.data(),
                      p1.probs.data.size() * 4) == 0);
}

TEST_CASE("predictor contract violations") {
    Volume v = testutil::random_volume({4, 4, 4}, {1, 1, 1}, 2);
    BlendMode blend;
    SUBCASE("wrong spatial shape") {
        PatchPredictor bad = [](const Tensor4&) { return Tensor4(2, {1, 1, 1}); };
        CHECK_THROWS_AS(sliding_window_infer(v, bad, {2, 2, 2}, 0.0, blend), contract_error);
    }
    SUBCASE("channel count changes between tiles") {
        int calls = 0;
        PatchPredictor flaky = [&calls](const Tensor4& patch) {
            return Tensor4(++calls == 1 ? 2 : 3, patch.shape);
        };
        CHECK_THROWS_AS(sliding_window_infer(v, flaky, {2, 2, 2}, 0.0, blend), contract_error);
    }
}

TEST_CASE("argmax_mask examples and loop oracle") {
    ProbVolume pv;
    pv.probs = Tensor4(2, {2, 2, 1});
    const std::int64_t n = pv.probs.spatial_size();
    // (0.9, 0.1) -> 0; (0.1, 0.9) -> 1; tie (0.5, 0.5) -> 0
    const float p0[] = {0.9f, 0.1f, 0.5f, 0.4f};
    for (int i = 0; i < 4; ++i) {
        pv.probs.data[i] = p0[i];
        pv.probs.data[n + i] = 1.0f - p0[i];
    }
    MaskVolume m = argmax_mask(pv);
    CHECK(m.data == std::vector<std::uint8_t>({0, 1, 0, 1}));

    // random volumes vs a naive per-voxel loop
    CounterRng rng(5);
    ProbVolume r;
    r.probs = Tensor4(3, {3, 4, 2});
    for (auto& x : r.probs.data) x = static_cast<float>(rng.next_double());
    MaskVolume got = argmax_mask(r);
    const std::int64_t rn = r.probs.spatial_size();
    for (std::int64_t v = 0; v < rn; ++v) {
        int best = 0;
        for (int c = 1; c < 3; ++c)
            if (r.probs.data[c * rn + v] > r.probs.data[best * rn + v]) best = c;
        CHECK(got.data[v] == best);
    }
}

TEST_CASE("ensemble voting") {
    auto make_pv = [](float p0, float p1) {
        ProbVolume pv;
        pv.probs = Tensor4(2, {1, 1, 1});
        pv.probs.data[0] = p0;
        pv.probs.data[1] = p1;
        return pv;
    };

    SUBCASE("a single model is plain argmax") {
        std::vector<ProbVolume> one{make_pv(0.2f, 0.8f)};
        CHECK(ensemble_vote(one).data[0] == 1);
    }
    SUBCASE("identical models vote like one") {
        std::vector<ProbVolume> three{make_pv(0.2f, 0.8f), make_pv(0.2f, 0.8f),
                                      make_pv(0.2f, 0.8f)};
        CHECK(ensemble_vote(three).data[0] == 1);
    }
    SUBCASE("mean of (0.8,0.2) and (0.3,0.7) picks class 0") {
        std::vector<ProbVolume> two{make_pv(0.8f, 0.2f), make_pv(0.3f, 0.7f)};
        CHECK(ensemble_vote(two).data[0] == 0);
    }
    SUBCASE("majority-label mode counts hard votes") {
        std::vector<ProbVolume> three{make_pv(0.2f, 0.8f), make_pv(0.4f, 0.6f),
                                      make_pv(0.9f, 0.1f)};
        CHECK(ensemble_vote(three, VoteMode::majority_label).data[0] == 1);
        // mean mode: mean p1 = 0.5, tie -> background
        CHECK(ensemble_vote(three, VoteMode::mean_probability).data[0] == 0);
    }
    SUBCASE("errors") {
        std::vector<ProbVolume> none;
        CHECK_THROWS_AS(ensemble_vote(none), argument_error);
        ProbVolume small = make_pv(0.5f, 0.5f);
        ProbVolume big;
        big.probs = Tensor4(2, {2, 1, 1});
        std::vector<ProbVolume> bad{small, big};
        CHECK_THROWS_AS(ensemble_vote(bad), argument_error);
    }
}
