#ifndef VOLWINDOW_PHANTOM_HPP
#define VOLWINDOW_PHANTOM_HPP

#include <array>
#include <cstdint>

#include "volwindow/volume.hpp"

namespace volwindow {

// Synthetic PET-like case: smooth background uptake + Gaussian-blob
// "lesions" with a matching ball ground-truth mask. Deterministic per seed.
struct PhantomSpec {
    std::array<int, 3> shape{48, 48, 48};
    std::array<double, 3> spacing{2.0, 2.0, 3.0};
    int lesions = 3;
    std::uint64_t seed = 0;
};

struct PhantomCase {
    Volume pet;
    MaskVolume gt;
};

PhantomCase make_phantom(const PhantomSpec& spec);

} // namespace volwindow

#endif
