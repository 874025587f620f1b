#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "test_util.hpp"
#include "volwindow/errors.hpp"
#include "volwindow/preprocess.hpp"

using namespace volwindow;

namespace {

// encodes a world coordinate into a voxel value, exactly representable for
// small integer coordinates
float world_tag(const std::array<double, 3>& w) {
    return static_cast<float>(w[0] + 100.0 * w[1] + 10000.0 * w[2]);
}

Volume tagged_volume(std::array<int, 3> shape, const Mat4& affine,
                     std::array<double, 3> spacing) {
    Volume v(shape, spacing);
    v.affine = affine;
    v.orientation_code = orientation_code_of(affine);
    for (int z = 0; z < shape[2]; ++z)
        for (int y = 0; y < shape[1]; ++y)
            for (int x = 0; x < shape[0]; ++x)
                v.at(x, y, z) = world_tag(apply_affine(affine, x, y, z));
    return v;
}

} // namespace

TEST_CASE("reorient of an already-RAS volume is the identity") {
    Volume v = testutil::random_volume({3, 4, 5}, {2, 2, 3}, 1);
    Volume r = reorient_to_ras(v);
    CHECK(r.orientation_code == "RAS");
    CHECK(r.shape == v.shape);
    CHECK(std::memcmp(r.data.data(), v.data.data(), v.data.size() * 4) == 0);
}

TEST_CASE("LPS volume flips x and y; world coordinates survive") {
    Mat4 affine = mat4_identity();
    affine[0][0] = -2.0; // x toward Left
    affine[1][1] = -2.0; // y toward Posterior
    affine[2][2] = 3.0;
    Volume v = tagged_volume({3, 3, 3}, affine, {2, 2, 3});
    CHECK(v.orientation_code == "LPS");

    Volume r = reorient_to_ras(v);
    CHECK(r.orientation_code == "RAS");
    CHECK(r.shape == v.shape);

    // voxel (0,0,0) of the output holds what voxel (nx-1, ny-1, 0) held
    CHECK(r.at(0, 0, 0) == v.at(2, 2, 0));

    // every voxel's world coordinate tag must match the new affine
    for (int z = 0; z < 3; ++z)
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 3; ++x) {
                const auto w = apply_affine(r.affine, x, y, z);
                CHECK(r.at(x, y, z) == doctest::Approx(world_tag(w)).epsilon(1e-6));
            }
}

TEST_CASE("reorient handles axis permutations and preserves the value multiset") {
    // voxel x -> Superior, y -> Left, z -> Anterior (code "ILA"-ish scramble)
    Mat4 affine{};
    affine[2][0] = 3.0;
    affine[0][1] = -2.0;
    affine[1][2] = 2.0;
    affine[3][3] = 1.0;
    affine[0][3] = 5.0;
    Volume v = tagged_volume({2, 3, 4}, affine, {3, 2, 2});

    Volume r = reorient_to_ras(v);
    CHECK(r.orientation_code == "RAS");

    auto sorted = [](std::vector<float> d) {
        std::sort(d.begin(), d.end());
        return d;
    };
    CHECK(sorted(r.data) == sorted(v.data));

    for (int z = 0; z < r.shape[2]; ++z)
        for (int y = 0; y < r.shape[1]; ++y)
            for (int x = 0; x < r.shape[0]; ++x) {
                const auto w = apply_affine(r.affine, x, y, z);
                CHECK(r.at(x, y, z) == doctest::Approx(world_tag(w)).epsilon(1e-6));
            }
    CHECK_NOTHROW(r.validate());
}

TEST_CASE("singular affine is a geometry error") {
    Volume v({2, 2, 2}, {1, 1, 1});
    v.affine[0][0] = 0.0; // column collapses
    CHECK_THROWS_AS(reorient_to_ras(v), geometry_error);
}

TEST_CASE("resample to the same spacing is bit-identical") {
    Volume v = testutil::random_volume({4, 5, 6}, {2, 2, 3}, 3);
    Volume r = resample(v, {2, 2, 3}, Interp::trilinear);
    CHECK(r.shape == v.shape);
    CHECK(std::memcmp(r.data.data(), v.data.data(), v.data.size() * 4) == 0);
}

TEST_CASE("constant volume stays constant under any spacing change") {
    Volume v({4, 4, 4}, {1, 1, 1});
    std::fill(v.data.begin(), v.data.end(), 3.75f);
    Volume r = resample(v, {1.7, 0.6, 2.3}, Interp::trilinear);
    for (float x : r.data) CHECK(x == doctest::Approx(3.75).epsilon(1e-7));
}

TEST_CASE("x-ramp downsample matches the hand-evaluated corner-anchored profile") {
    // values = x index; [1,1,1] -> [2,2,2] puts output samples at input
    // continuous x = 0 and 2, so the profile is [0, 2]
    Volume v({4, 4, 4}, {1, 1, 1});
    for (int z = 0; z < 4; ++z)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) v.at(x, y, z) = static_cast<float>(x);
    Volume r = resample(v, {2, 2, 2}, Interp::trilinear);
    REQUIRE(r.shape == std::array<int, 3>{2, 2, 2});
    for (int z = 0; z < 2; ++z)
        for (int y = 0; y < 2; ++y) {
            CHECK(r.at(0, y, z) == doctest::Approx(0.0));
            CHECK(r.at(1, y, z) == doctest::Approx(2.0));
        }
}

TEST_CASE("trilinear output stays inside the input range") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Volume v = testutil::random_volume({5, 4, 3}, {1, 2, 3}, seed);
        const auto [mn, mx] = std::minmax_element(v.data.begin(), v.data.end());
        Volume r = resample(v, {0.7, 1.3, 2.1}, Interp::trilinear);
        for (float x : r.data) {
            CHECK(x >= *mn - 1e-5f);
            CHECK(x <= *mx + 1e-5f);
        }
    }
}

TEST_CASE("resample preserves the origin and sets target spacing") {
    Volume v = testutil::random_volume({4, 4, 4}, {2, 2, 3}, 9);
    v.affine[0][3] = -7.0;
    v.affine[1][3] = 2.5;
    v.affine[2][3] = 11.0;
    Volume r = resample(v, {1, 1, 1}, Interp::trilinear);
    const auto w0_in = apply_affine(v.affine, 0, 0, 0);
    const auto w0_out = apply_affine(r.affine, 0, 0, 0);
    for (int i = 0; i < 3; ++i) CHECK(w0_out[i] == doctest::Approx(w0_in[i]).epsilon(1e-12));
    for (int i = 0; i < 3; ++i)
        CHECK(affine_column_norm(r.affine, i) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_NOTHROW(r.validate());
}

TEST_CASE("mask resample uses nearest and stays binary") {
    MaskVolume m = testutil::random_mask({6, 6, 6}, {2, 2, 2}, 4);
    MaskVolume r = resample(m, {3, 3, 3});
    CHECK(r.shape == std::array<int, 3>{4, 4, 4});
    for (auto v : r.data) CHECK((v == 0 || v == 1));
}

TEST_CASE("serial and parallel resample agree bitwise") {
    Volume v = testutil::random_volume({7, 6, 5}, {1, 1, 1}, 17);
    Volume a = resample(v, {0.9, 1.4, 0.6}, Interp::trilinear, ExecMode::serial);
    Volume b = resample(v, {0.9, 1.4, 0.6}, Interp::trilinear, ExecMode::parallel);
    CHECK(std::memcmp(a.data.data(), b.data.data(), a.data.size() * 4) == 0);
}

TEST_CASE("full-range percentiles give an exact linear map") {
    Volume v({101, 1, 1}, {1, 1, 1});
    for (int i = 0; i <= 100; ++i) v.data[i] = static_cast<float>(i * 100); // 0..10000
    PreprocessConfig cfg;
    cfg.lower_percentile = 0.0;
    cfg.upper_percentile = 100.0;
    auto res = scale_intensity_percentile(v, cfg);
    CHECK_FALSE(res.degenerate);
    CHECK(res.lo == doctest::Approx(0.0));
    CHECK(res.hi == doctest::Approx(10000.0));
    for (int i = 0; i <= 100; ++i)
        CHECK(res.volume.data[i] == doctest::Approx(i / 100.0).epsilon(1e-7));
}

TEST_CASE("constant volume scales to zeros with the degenerate flag") {
    Volume v({3, 3, 3}, {1, 1, 1});
    std::fill(v.data.begin(), v.data.end(), 5.0f);
    auto res = scale_intensity_percentile(v, PreprocessConfig{});
    CHECK(res.degenerate);
    for (float x : res.volume.data) CHECK(x == 0.0f);
}

TEST_CASE("0.05/99.95 percentiles on 0..999 match the sort-and-interpolate oracle") {
    Volume v({10, 10, 10}, {1, 1, 1});
    for (int i = 0; i < 1000; ++i) v.data[i] = static_cast<float>(i);

    // independent oracle: sorted values, rank p/100*(n-1), linear interpolation
    auto oracle = [&](double p) {
        std::vector<float> s = v.data;
        std::sort(s.begin(), s.end());
        const double rank = p / 100.0 * 999.0;
        const std::size_t i = static_cast<std::size_t>(rank);
        return s[i] + (rank - i) * (s[i + 1] - s[i]);
    };
    const double lo = oracle(0.05), hi = oracle(99.95);
    CHECK(lo == doctest::Approx(0.4995).epsilon(1e-9));
    CHECK(hi == doctest::Approx(998.5005).epsilon(1e-9));

    auto res = scale_intensity_percentile(v, PreprocessConfig{});
    CHECK(res.lo == doctest::Approx(lo).epsilon(1e-12));
    CHECK(res.hi == doctest::Approx(hi).epsilon(1e-12));
    CHECK(res.volume.data[500] ==
          doctest::Approx((500.0 - lo) / (hi - lo)).epsilon(1e-6));
    CHECK(res.volume.data[500] == doctest::Approx(0.5005010015).epsilon(1e-6));
}

TEST_CASE("intensity scaling is invariant under positive affine input transforms") {
    Volume v = testutil::random_volume({6, 6, 6}, {1, 1, 1}, 23, 0.0f, 50.0f);
    auto base = scale_intensity_percentile(v, PreprocessConfig{});

    Volume transformed = v;
    for (auto& x : transformed.data) x = 3.5f * x - 12.0f;
    auto shifted = scale_intensity_percentile(transformed, PreprocessConfig{});

    for (std::size_t i = 0; i < v.data.size(); ++i)
        CHECK(shifted.volume.data[i] == doctest::Approx(base.volume.data[i]).epsilon(1e-6));
}

TEST_CASE("nan_guard replaces non-finite voxels and is idempotent") {
    Volume v = testutil::random_volume({4, 4, 4}, {1, 1, 1}, 31);
    SUBCASE("all finite") {
        auto res = nan_guard(v);
        CHECK(res.replaced == 0);
        CHECK(std::memcmp(res.volume.data.data(), v.data.data(), v.data.size() * 4) == 0);
    }
    SUBCASE("3 NaNs and one inf") {
        v.data[0] = std::nanf("");
        v.data[5] = std::nanf("");
        v.data[9] = std::nanf("");
        v.data[12] = std::numeric_limits<float>::infinity();
        auto res = nan_guard(v);
        CHECK(res.replaced == 4);
        CHECK(res.volume.data[0] == 0.0f);
        CHECK(res.volume.data[5] == 0.0f);
        CHECK(res.volume.data[9] == 0.0f);
        CHECK(res.volume.data[12] == 0.0f);
        auto again = nan_guard(res.volume);
        CHECK(again.replaced == 0);
        CHECK(again.volume.data == res.volume.data);
    }
    SUBCASE("all NaN") {
        std::fill(v.data.begin(), v.data.end(), std::nanf(""));
        auto res = nan_guard(v);
        CHECK(res.replaced == v.voxels());
        for (float x : res.volume.data) CHECK(x == 0.0f);
    }
}

TEST_CASE("preprocess chain guards NaNs before any statistic") {
    Volume v = testutil::random_volume({8, 8, 8}, {2, 2, 3}, 77, 0.0f, 20.0f);
    v.data[17] = std::nanf("");
    v.data[100] = -std::numeric_limits<float>::infinity();

    auto [processed, report] = run_preprocess(v, PreprocessConfig{});
    CHECK(report.replaced_nans == 2);
    CHECK(std::isfinite(report.lo));
    CHECK(std::isfinite(report.hi));
    for (float x : processed.data) CHECK(std::isfinite(x));
    CHECK(report.out_shape == processed.shape);
}

TEST_CASE("config validation") {
    PreprocessConfig cfg;
    cfg.lower_percentile = 50.0;
    cfg.upper_percentile = 10.0;
    CHECK_THROWS_AS(cfg.validate(), argument_error);
    cfg = PreprocessConfig{};
    cfg.target_spacing[2] = -1.0;
    CHECK_THROWS_AS(cfg.validate(), argument_error);
}
