#ifndef VOLWINDOW_VOLUME_HPP
#define VOLWINDOW_VOLUME_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "volwindow/errors.hpp"

namespace volwindow {

// 4x4 homogeneous matrix, voxel index -> world mm. Row-major.
using Mat4 = std::array<std::array<double, 4>, 4>;

inline Mat4 mat4_identity() {
    Mat4 m{};
    for (int i = 0; i < 4; ++i) m[i][i] = 1.0;
    return m;
}

inline Mat4 mat4_mul(const Mat4& a, const Mat4& b) {
    Mat4 r{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double s = 0.0;
            for (int k = 0; k < 4; ++k) s += a[i][k] * b[k][j];
            r[i][j] = s;
        }
    return r;
}

inline std::array<double, 3> apply_affine(const Mat4& m, double x, double y, double z) {
    std::array<double, 3> out{};
    for (int i = 0; i < 3; ++i)
        out[i] = m[i][0] * x + m[i][1] * y + m[i][2] * z + m[i][3];
    return out;
}

// Determinant of the 3x3 direction part.
inline double affine_det3(const Mat4& m) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

inline double affine_column_norm(const Mat4& m, int col) {
    return std::sqrt(m[0][col] * m[0][col] + m[1][col] * m[1][col] + m[2][col] * m[2][col]);
}

// Anatomical orientation code of an affine (e.g. "RAS", "LPS"): for each
// voxel axis, the world axis its column points along most strongly, greedily
// assigned so the mapping is a permutation.
std::string orientation_code_of(const Mat4& affine);

// Dense 3-D scalar grid with geometry. Data is x-fastest (Fortran order),
// matching the NIfTI on-disk layout: index = x + nx*(y + ny*z).
template <typename T>
struct Grid {
    std::array<int, 3> shape{0, 0, 0};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    Mat4 affine = mat4_identity();
    std::string orientation_code = "RAS";
    std::vector<T> data;

    Grid() = default;
    Grid(std::array<int, 3> s, std::array<double, 3> sp)
        : shape(s), spacing(sp), data(static_cast<std::size_t>(s[0]) * s[1] * s[2]) {
        for (int i = 0; i < 3; ++i) affine[i][i] = sp[i];
    }

    std::int64_t voxels() const {
        return static_cast<std::int64_t>(shape[0]) * shape[1] * shape[2];
    }

    std::int64_t index(int x, int y, int z) const {
        return x + static_cast<std::int64_t>(shape[0]) *
                       (y + static_cast<std::int64_t>(shape[1]) * z);
    }

    T& at(int x, int y, int z) { return data[index(x, y, z)]; }
    const T& at(int x, int y, int z) const { return data[index(x, y, z)]; }

    // Throws when a structural invariant is broken. Spacing/affine
    // consistency: per-axis column norm matches spacing within 1e-4 relative.
    void validate() const {
        for (int i = 0; i < 3; ++i) {
            if (shape[i] <= 0)
                throw shape_error("grid shape must be positive on every axis");
            if (!(spacing[i] > 0.0) || !std::isfinite(spacing[i]))
                throw argument_error("grid spacing must be strictly positive and finite");
        }
        if (static_cast<std::int64_t>(data.size()) != voxels())
            throw shape_error("grid data length does not equal the shape product");
        for (int i = 0; i < 3; ++i) {
            double n = affine_column_norm(affine, i);
            if (std::abs(n - spacing[i]) > 1e-4 * spacing[i])
                throw geometry_error("affine column norm disagrees with spacing on axis " +
                                     std::to_string(i));
        }
    }
};

using Volume = Grid<float>;
using MaskVolume = Grid<std::uint8_t>;
using LabelVolume = Grid<std::int32_t>;

inline bool is_binary(const MaskVolume& mask) {
    for (auto v : mask.data)
        if (v > 1) return false;
    return true;
}

inline void require_binary(const MaskVolume& mask, const char* what) {
    if (!is_binary(mask))
        throw argument_error(std::string(what) + ": mask must be binary (values 0/1)");
}

// Physical volume of one voxel in milliliters, spacing in mm.
inline double voxel_volume_ml(const std::array<double, 3>& spacing) {
    for (double s : spacing)
        if (!(s > 0.0) || !std::isfinite(s))
            throw argument_error("voxel_volume_ml: spacing must be strictly positive");
    return spacing[0] * spacing[1] * spacing[2] / 1000.0;
}

} // namespace volwindow

#endif
