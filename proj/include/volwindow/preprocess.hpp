#ifndef VOLWINDOW_PREPROCESS_HPP
#define VOLWINDOW_PREPROCESS_HPP

#include <array>
#include <cstdint>
#include <utility>

#include "volwindow/kernels.hpp"
#include "volwindow/volume.hpp"

namespace volwindow {

struct PreprocessConfig {
    std::array<double, 3> target_spacing{2.0, 2.0, 3.0};
    double lower_percentile = 0.05;
    double upper_percentile = 99.95;
    bool clip = true;
    bool nan_guard = true;

    void validate() const {
        if (!(lower_percentile >= 0.0 && lower_percentile < 100.0))
            throw argument_error("lower_percentile must be in [0, 100)");
        if (!(upper_percentile > 0.0 && upper_percentile <= 100.0))
            throw argument_error("upper_percentile must be in (0, 100]");
        if (!(lower_percentile < upper_percentile))
            throw argument_error("lower_percentile must be below upper_percentile");
        for (double s : target_spacing)
            if (!(s > 0.0)) throw argument_error("target_spacing must be strictly positive");
    }
};

// Permutes/flips axes so each index increases toward Right/Anterior/Superior;
// world coordinates of every voxel are unchanged.
Volume reorient_to_ras(const Volume& v);
MaskVolume reorient_to_ras(const MaskVolume& m);

enum class Interp { trilinear, nearest };

// Resamples onto target_spacing. Output sample i sits at input continuous
// index i * (target/source) per axis (corner-anchored, origin preserved);
// out-of-grid samples take the nearest-edge value.
Volume resample(const Volume& v, std::array<double, 3> target_spacing, Interp mode,
                ExecMode exec = ExecMode::parallel);
MaskVolume resample(const MaskVolume& m, std::array<double, 3> target_spacing,
                    ExecMode exec = ExecMode::parallel); // nearest only

struct ScaleResult {
    Volume volume;
    double lo = 0.0;
    double hi = 0.0;
    bool degenerate = false; // hi == lo; output forced to all zeros
};

// Maps the volume's own [lower, upper] percentile window to [0, 1]
// (linear-interpolation percentile at rank p/100*(n-1)), clipping when
// configured. Input must be NaN-free; run nan_guard first.
ScaleResult scale_intensity_percentile(const Volume& v, const PreprocessConfig& cfg);

struct NanGuardResult {
    Volume volume;
    std::int64_t replaced = 0;
};

// Replaces every non-finite voxel (NaN, +-inf) with 0.0.
NanGuardResult nan_guard(const Volume& v);

struct PreprocessReport {
    std::int64_t replaced_nans = 0;
    double lo = 0.0;
    double hi = 0.0;
    bool degenerate = false;
    std::array<int, 3> out_shape{0, 0, 0};
};

// Full chain in the fixed order nan_guard -> reorient -> resample -> scale.
std::pair<Volume, PreprocessReport> run_preprocess(const Volume& v, const PreprocessConfig& cfg,
                                                   ExecMode exec = ExecMode::parallel);

// Linear-interpolation percentile of the values (p in [0, 100]).
double percentile_linear(std::vector<float> values, double p);

} // namespace volwindow

#endif
