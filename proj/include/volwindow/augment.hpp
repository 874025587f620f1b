#ifndef VOLWINDOW_AUGMENT_HPP
#define VOLWINDOW_AUGMENT_HPP

#include <array>
#include <cstdint>

#include "volwindow/rng.hpp"
#include "volwindow/volume.hpp"

namespace volwindow {

struct CropConfig {
    std::array<int, 3> crop_size{224, 224, 224};
    double pos_ratio = 0.6;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(pos_ratio >= 0.0 && pos_ratio <= 1.0))
            throw argument_error("pos_ratio must be in [0, 1]");
        for (int c : crop_size)
            if (c < 1) throw argument_error("crop_size entries must be >= 1");
    }
};

enum class CenterClass { positive, negative };

struct CropSample {
    Volume image;
    MaskVolume label;
    std::array<int, 3> center{};      // clamped center index in the source volume
    CenterClass center_class = CenterClass::negative;
    bool fallback = false;            // drawn class had no voxels; other class used
};

// Class-balanced crop: with probability pos_ratio the center is uniform over
// label==1 voxels, else over label==0. The window is clamped in-bounds where
// the volume is large enough; axes smaller than the crop are zero-padded
// symmetrically. Crops are exactly crop_size.
CropSample sample_balanced_crop(const Volume& image, const MaskVolume& label,
                                const CropConfig& cfg, CounterRng& rng);

// Per-axis flip with probability p, image and label always in lockstep.
// Returns which axes fired.
std::array<bool, 3> random_flip(Volume& image, MaskVolume& label, double p, CounterRng& rng);

// Per-plane (xy, yz, xz) +90-degree rotation with probability p. The two
// in-plane extents must match when a rotation fires.
std::array<bool, 3> random_rot90(Volume& image, MaskVolume& label, double p, CounterRng& rng);

// Deterministic primitives behind the stochastic ops.
template <typename T>
Grid<T> flip_axis(const Grid<T>& g, int axis);

// plane: 0 = xy, 1 = yz, 2 = xz. +90 degrees: first in-plane axis index map
// (i, j) -> (j, n-1-i).
template <typename T>
Grid<T> rot90(const Grid<T>& g, int plane);

} // namespace volwindow

#endif
