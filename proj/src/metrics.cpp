#include "volwindow/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "volwindow/errors.hpp"

namespace volwindow {

namespace {

void check_pair(const MaskVolume& pred, const MaskVolume& gt) {
    if (pred.shape != gt.shape)
        throw argument_error("metrics: pred and gt shapes differ");
    require_binary(pred, "metrics");
    require_binary(gt, "metrics");
}

struct DisjointSet {
    std::vector<std::int32_t> parent;

    std::int32_t make() {
        parent.push_back(static_cast<std::int32_t>(parent.size()));
        return parent.back();
    }
    std::int32_t find(std::int32_t i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]]; // path halving
            i = parent[i];
        }
        return i;
    }
    void unite(std::int32_t a, std::int32_t b) { parent[find(a)] = find(b); }
};

// Backward half-neighborhood (already-scanned voxels) for each connectivity.
std::vector<std::array<int, 3>> backward_offsets(int connectivity) {
    if (connectivity != 6 && connectivity != 18 && connectivity != 26)
        throw argument_error("connectivity must be 6, 18, or 26");
    std::vector<std::array<int, 3>> offs;
    for (int dz = -1; dz <= 0; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dz == 0 && (dy > 0 || (dy == 0 && dx >= 0))) continue; // not yet scanned
                const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
                if (connectivity == 6 && manhattan > 1) continue;
                if (connectivity == 18 && manhattan > 2) continue;
                offs.push_back({dx, dy, dz});
            }
    return offs;
}

} // namespace

double dice_score(const MaskVolume& pred, const MaskVolume& gt) {
    check_pair(pred, gt);
    std::int64_t inter = 0, p = 0, g = 0;
    for (std::int64_t i = 0; i < pred.voxels(); ++i) {
        p += pred.data[i];
        g += gt.data[i];
        inter += pred.data[i] & gt.data[i];
    }
    if (p + g == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(p + g);
}

Components connected_components(const MaskVolume& mask, int connectivity) {
    require_binary(mask, "connected_components");
    const auto offs = backward_offsets(connectivity);

    Components out;
    out.labels.shape = mask.shape;
    out.labels.spacing = mask.spacing;
    out.labels.affine = mask.affine;
    out.labels.orientation_code = mask.orientation_code;
    out.labels.data.assign(static_cast<std::size_t>(mask.voxels()), 0);

    DisjointSet ds;
    std::vector<std::int32_t> provisional(static_cast<std::size_t>(mask.voxels()), -1);

    const auto& s = mask.shape;
    for (int z = 0; z < s[2]; ++z)
        for (int y = 0; y < s[1]; ++y)
            for (int x = 0; x < s[0]; ++x) {
                const std::int64_t i = mask.index(x, y, z);
                if (mask.data[i] == 0) continue;
                std::int32_t label = -1;
                for (const auto& d : offs) {
                    const int nx = x + d[0], ny = y + d[1], nz = z + d[2];
                    if (nx < 0 || ny < 0 || nz < 0 || nx >= s[0] || ny >= s[1] || nz >= s[2])
                        continue;
                    const std::int32_t nb = provisional[mask.index(nx, ny, nz)];
                    if (nb < 0) continue;
                    if (label < 0)
                        label = ds.find(nb);
                    else
                        ds.unite(label, nb);
                }
                if (label < 0) label = ds.make();
                provisional[i] = label;
            }

    // Dense labels in first-encounter order (x-fastest scan).
    std::vector<std::int32_t> remap(ds.parent.size(), 0);
    std::int32_t next = 0;
    for (std::int64_t i = 0; i < mask.voxels(); ++i) {
        if (provisional[i] < 0) continue;
        const std::int32_t root = ds.find(provisional[i]);
        if (remap[root] == 0) remap[root] = ++next;
        out.labels.data[i] = remap[root];
    }
    out.count = next;
    return out;
}

namespace {

// Volume of `outer` components having zero voxel overlap with `other`.
double untouched_component_volume(const MaskVolume& outer, const MaskVolume& other,
                                  const std::array<double, 3>& spacing, int connectivity) {
    const Components comps = connected_components(outer, connectivity);
    std::vector<std::int64_t> voxel_count(comps.count + 1, 0);
    std::vector<char> touched(comps.count + 1, 0);
    for (std::int64_t i = 0; i < outer.voxels(); ++i) {
        const std::int32_t label = comps.labels.data[i];
        if (label == 0) continue;
        ++voxel_count[label];
        if (other.data[i] != 0) touched[label] = 1;
    }
    std::int64_t untouched = 0;
    for (int c = 1; c <= comps.count; ++c)
        if (!touched[c]) untouched += voxel_count[c];
    return static_cast<double>(untouched) * voxel_volume_ml(spacing);
}

} // namespace

double false_positive_volume(const MaskVolume& pred, const MaskVolume& gt,
                             const std::array<double, 3>& spacing, int connectivity) {
    check_pair(pred, gt);
    return untouched_component_volume(pred, gt, spacing, connectivity);
}

double false_negative_volume(const MaskVolume& pred, const MaskVolume& gt,
                             const std::array<double, 3>& spacing, int connectivity) {
    check_pair(pred, gt);
    return untouched_component_volume(gt, pred, spacing, connectivity);
}

MetricsReport evaluate_case(const MaskVolume& pred, const MaskVolume& gt, int connectivity) {
    check_pair(pred, gt);
    MetricsReport r;
    r.dice = dice_score(pred, gt);
    r.fpv_ml = false_positive_volume(pred, gt, gt.spacing, connectivity);
    r.fnv_ml = false_negative_volume(pred, gt, gt.spacing, connectivity);
    r.n_pred_components = connected_components(pred, connectivity).count;
    r.n_gt_components = connected_components(gt, connectivity).count;
    r.voxel_volume_ml = voxel_volume_ml(gt.spacing);
    return r;
}

} // namespace volwindow
