#ifndef VOLWINDOW_METRICS_HPP
#define VOLWINDOW_METRICS_HPP

#include <array>

#include "volwindow/volume.hpp"

namespace volwindow {

struct MetricsReport {
    double dice = 0.0;
    double fnv_ml = 0.0;
    double fpv_ml = 0.0;
    int n_pred_components = 0;
    int n_gt_components = 0;
    double voxel_volume_ml = 0.0;
};

// 2|P & G| / (|P| + |G|); 1.0 when both masks are empty.
double dice_score(const MaskVolume& pred, const MaskVolume& gt);

struct Components {
    LabelVolume labels; // 0 background, components labeled 1..count
    int count = 0;
};

// Union-find connected components; labels are dense and assigned in order of
// each component's first voxel in x-fastest scan order.
Components connected_components(const MaskVolume& mask, int connectivity /*6|18|26*/);

// Total volume (mL) of pred components with zero overlap against gt.
double false_positive_volume(const MaskVolume& pred, const MaskVolume& gt,
                             const std::array<double, 3>& spacing, int connectivity = 26);

// Total volume (mL) of gt components with zero overlap against pred.
double false_negative_volume(const MaskVolume& pred, const MaskVolume& gt,
                             const std::array<double, 3>& spacing, int connectivity = 26);

// Dice + FNV + FPV for one case; spacing and voxel volume come from gt.
MetricsReport evaluate_case(const MaskVolume& pred, const MaskVolume& gt,
                            int connectivity = 26);

} // namespace volwindow

#endif
