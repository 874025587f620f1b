#ifndef VOLWINDOW_TENSOR_HPP
#define VOLWINDOW_TENSOR_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "volwindow/errors.hpp"
#include "volwindow/volume.hpp"

namespace volwindow {

// Channel-major 4-D array (c, x, y, z) with x-fastest spatial layout:
// index = ((c*nz + z)*ny + y)*nx + x. The patch currency of the network and
// the sliding-window inferer.
struct Tensor4 {
    int channels = 0;
    std::array<int, 3> shape{0, 0, 0};
    std::vector<float> data;

    Tensor4() = default;
    Tensor4(int c, std::array<int, 3> s)
        : channels(c), shape(s),
          data(static_cast<std::size_t>(c) * s[0] * s[1] * s[2], 0.0f) {}

    std::int64_t spatial_size() const {
        return static_cast<std::int64_t>(shape[0]) * shape[1] * shape[2];
    }
    std::int64_t size() const { return channels * spatial_size(); }

    std::int64_t index(int c, int x, int y, int z) const {
        return ((static_cast<std::int64_t>(c) * shape[2] + z) * shape[1] + y) * shape[0] + x;
    }
    float& at(int c, int x, int y, int z) { return data[index(c, x, y, z)]; }
    const float& at(int c, int x, int y, int z) const { return data[index(c, x, y, z)]; }

    float* channel(int c) { return data.data() + c * spatial_size(); }
    const float* channel(int c) const { return data.data() + c * spatial_size(); }
};

// Per-channel probability (or logit) field over a whole volume, carrying the
// source volume's geometry so discrete masks inherit it.
struct ProbVolume {
    Tensor4 probs;
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    Mat4 affine = mat4_identity();
    std::string orientation_code = "RAS";
};

} // namespace volwindow

#endif
