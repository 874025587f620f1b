#include "volwindow/augment.hpp"

#include <algorithm>
#include <vector>

#include "volwindow/errors.hpp"
#include "volwindow/nifti.hpp"

namespace volwindow {

template <typename T>
Grid<T> flip_axis(const Grid<T>& g, int axis) {
    Grid<T> out = g;
    const auto& s = g.shape;
    for (int z = 0; z < s[2]; ++z)
        for (int y = 0; y < s[1]; ++y)
            for (int x = 0; x < s[0]; ++x) {
                std::array<int, 3> idx{x, y, z};
                idx[axis] = s[axis] - 1 - idx[axis];
                out.at(x, y, z) = g.at(idx[0], idx[1], idx[2]);
            }
    // keep world coordinates: negate the column, shift the origin
    for (int r = 0; r < 3; ++r) {
        out.affine[r][3] = g.affine[r][3] + g.affine[r][axis] * (s[axis] - 1.0);
        out.affine[r][axis] = -g.affine[r][axis];
    }
    out.orientation_code = orientation_code_of(out.affine);
    return out;
}

template Grid<float> flip_axis(const Grid<float>&, int);
template Grid<std::uint8_t> flip_axis(const Grid<std::uint8_t>&, int);

namespace {
constexpr int kPlaneAxes[3][2] = {{0, 1}, {1, 2}, {0, 2}}; // xy, yz, xz
}

template <typename T>
Grid<T> rot90(const Grid<T>& g, int plane) {
    const int a = kPlaneAxes[plane][0];
    const int b = kPlaneAxes[plane][1];

    Grid<T> out;
    out.shape = g.shape;
    out.shape[a] = g.shape[b];
    out.shape[b] = g.shape[a];
    out.spacing = g.spacing;
    out.spacing[a] = g.spacing[b];
    out.spacing[b] = g.spacing[a];
    out.data.resize(static_cast<std::size_t>(out.voxels()));

    // out(p, q) = in(n_a - 1 - q, p) on the (a, b) plane
    for (int z = 0; z < out.shape[2]; ++z)
        for (int y = 0; y < out.shape[1]; ++y)
            for (int x = 0; x < out.shape[0]; ++x) {
                std::array<int, 3> ni{x, y, z};
                std::array<int, 3> oi = ni;
                oi[a] = g.shape[a] - 1 - ni[b];
                oi[b] = ni[a];
                out.at(x, y, z) = g.at(oi[0], oi[1], oi[2]);
            }

    out.affine = g.affine;
    for (int r = 0; r < 3; ++r) {
        out.affine[r][a] = g.affine[r][b];
        out.affine[r][b] = -g.affine[r][a];
        out.affine[r][3] = g.affine[r][3] + g.affine[r][a] * (g.shape[a] - 1.0);
    }
    out.orientation_code = orientation_code_of(out.affine);
    return out;
}

template Grid<float> rot90(const Grid<float>&, int);
template Grid<std::uint8_t> rot90(const Grid<std::uint8_t>&, int);

namespace {

struct AxisWindow {
    int src_start; // first source index copied
    int copy_len;  // number of source voxels copied
    int dst_start; // destination offset (symmetric zero padding)
    int center;    // clamped center index
};

AxisWindow axis_window(int dim, int crop, int center) {
    AxisWindow w{};
    if (dim >= crop) {
        const int half = crop / 2;
        const int c = std::clamp(center, half, dim - crop + half);
        w.src_start = c - half;
        w.copy_len = crop;
        w.dst_start = 0;
        w.center = c;
    } else {
        w.src_start = 0;
        w.copy_len = dim;
        w.dst_start = (crop - dim) / 2;
        w.center = std::clamp(center, 0, dim - 1);
    }
    return w;
}

template <typename T>
Grid<T> extract(const Grid<T>& g, const std::array<AxisWindow, 3>& w,
                const std::array<int, 3>& crop) {
    Grid<T> out(crop, g.spacing);
    out.orientation_code = g.orientation_code;
    out.affine = g.affine;
    for (int r = 0; r < 3; ++r)
        for (int a = 0; a < 3; ++a)
            out.affine[r][3] += g.affine[r][a] * (w[a].src_start - w[a].dst_start);
    for (int z = 0; z < w[2].copy_len; ++z)
        for (int y = 0; y < w[1].copy_len; ++y)
            for (int x = 0; x < w[0].copy_len; ++x)
                out.at(w[0].dst_start + x, w[1].dst_start + y, w[2].dst_start + z) =
                    g.at(w[0].src_start + x, w[1].src_start + y, w[2].src_start + z);
    return out;
}

} // namespace

CropSample sample_balanced_crop(const Volume& image, const MaskVolume& label,
                                const CropConfig& cfg, CounterRng& rng) {
    cfg.validate();
    if (image.shape != label.shape)
        throw shape_error("sample_balanced_crop: image and label shapes differ");
    if (image.voxels() < 1) throw argument_error("sample_balanced_crop: empty volume");
    require_binary(label, "sample_balanced_crop");

    CropSample out;
    bool want_positive = rng.bernoulli(cfg.pos_ratio);

    // candidate centers in x-fastest scan order
    std::vector<std::int64_t> candidates;
    auto collect = [&](bool positive) {
        candidates.clear();
        for (std::int64_t i = 0; i < label.voxels(); ++i)
            if ((label.data[i] != 0) == positive) candidates.push_back(i);
    };
    collect(want_positive);
    if (candidates.empty()) {
        out.fallback = true;
        want_positive = !want_positive;
        collect(want_positive);
    }
    out.center_class = want_positive ? CenterClass::positive : CenterClass::negative;

    const std::int64_t flat = candidates[rng.uniform_below(candidates.size())];
    const int nx = image.shape[0], ny = image.shape[1];
    std::array<int, 3> center{static_cast<int>(flat % nx),
                              static_cast<int>((flat / nx) % ny),
                              static_cast<int>(flat / (static_cast<std::int64_t>(nx) * ny))};

    std::array<AxisWindow, 3> w;
    for (int a = 0; a < 3; ++a) {
        w[a] = axis_window(image.shape[a], cfg.crop_size[a], center[a]);
        out.center[a] = w[a].center;
    }
    out.image = extract(image, w, cfg.crop_size);
    out.label = extract(label, w, cfg.crop_size);
    return out;
}

std::array<bool, 3> random_flip(Volume& image, MaskVolume& label, double p, CounterRng& rng) {
    if (image.shape != label.shape)
        throw shape_error("random_flip: image and label shapes differ");
    std::array<bool, 3> fired{};
    for (int axis = 0; axis < 3; ++axis) {
        fired[axis] = rng.bernoulli(p);
        if (fired[axis]) {
            image = flip_axis(image, axis);
            label = flip_axis(label, axis);
        }
    }
    return fired;
}

std::array<bool, 3> random_rot90(Volume& image, MaskVolume& label, double p, CounterRng& rng) {
    if (image.shape != label.shape)
        throw shape_error("random_rot90: image and label shapes differ");
    std::array<bool, 3> fired{};
    for (int plane = 0; plane < 3; ++plane) {
        fired[plane] = rng.bernoulli(p);
        if (fired[plane]) {
            const int a = kPlaneAxes[plane][0];
            const int b = kPlaneAxes[plane][1];
            if (image.shape[a] != image.shape[b])
                throw shape_error("random_rot90: in-plane extents differ (" +
                                  std::to_string(image.shape[a]) + " vs " +
                                  std::to_string(image.shape[b]) + ")");
            image = rot90(image, plane);
            label = rot90(label, plane);
        }
    }
    return fired;
}

} // namespace volwindow
