#ifndef VOLWINDOW_KERNELS_HPP
#define VOLWINDOW_KERNELS_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "volwindow/tensor.hpp"
#include "volwindow/volume.hpp"

namespace volwindow {

// Every hot kernel comes in two flavors: a plain-loop serial reference and
// an OpenMP version. The pair must agree (bit-identically where the per-voxel
// arithmetic is unchanged, within 1e-5 relative where the optimized loop
// order differs); tests and the bench target compare them directly.
enum class ExecMode { serial, parallel };

namespace kernels {

// Zero-padded 3-D cross-correlation with per-axis stride.
// in:  (Cin, X, Y, Z); weights: (Cout, Cin, kx, ky, kz) flat, kx fastest;
// bias: (Cout); out: (Cout, X/sx, Y/sy, Z/sz), spatial extents must divide.
// Padding is (k-1)/2 per axis (odd kernels only).
void conv3d_ref(const Tensor4& in, const float* weights, const float* bias, int out_channels,
                std::array<int, 3> kernel, std::array<int, 3> stride, Tensor4& out);
void conv3d_omp(const Tensor4& in, const float* weights, const float* bias, int out_channels,
                std::array<int, 3> kernel, std::array<int, 3> stride, Tensor4& out);
Tensor4 conv3d(const Tensor4& in, const float* weights, const float* bias, int out_channels,
               std::array<int, 3> kernel, std::array<int, 3> stride, ExecMode mode);

// Transposed convolution with kernel == stride (exact upsample; every output
// voxel receives exactly one kernel tap). weights: (Cin, Cout, kx, ky, kz).
void conv3d_transposed_ref(const Tensor4& in, const float* weights, const float* bias,
                           int out_channels, std::array<int, 3> stride, Tensor4& out);
void conv3d_transposed_omp(const Tensor4& in, const float* weights, const float* bias,
                           int out_channels, std::array<int, 3> stride, Tensor4& out);
Tensor4 conv3d_transposed(const Tensor4& in, const float* weights, const float* bias,
                          int out_channels, std::array<int, 3> stride, ExecMode mode);

// In-place per-channel instance normalization followed by affine scale/shift.
void instance_norm(Tensor4& t, const float* scale, const float* shift, float eps, ExecMode mode);

void leaky_relu(Tensor4& t, float slope);

Tensor4 concat_channels(const Tensor4& a, const Tensor4& b);

// Trilinear resampling of one scalar grid onto out_shape, sample point for
// output index i being input continuous index i*scale[axis], clamped to the
// grid (nearest-edge extension).
void resample_trilinear_ref(const float* in, std::array<int, 3> in_shape, float* out,
                            std::array<int, 3> out_shape, std::array<double, 3> scale);
void resample_trilinear_omp(const float* in, std::array<int, 3> in_shape, float* out,
                            std::array<int, 3> out_shape, std::array<double, 3> scale);

// Weighted accumulation of one predicted tile into the stitching buffers:
// sum[c][v] += pred[c][v] * w[v], wsum[v] += w[v], for voxels of the tile at
// `start` inside a volume of `vol_shape`. Accumulators are float64.
void accumulate_tile_ref(const Tensor4& pred, const std::vector<double>& weights,
                         std::array<int, 3> start, std::array<int, 3> vol_shape, double* sum,
                         double* wsum);
void accumulate_tile_omp(const Tensor4& pred, const std::vector<double>& weights,
                         std::array<int, 3> start, std::array<int, 3> vol_shape, double* sum,
                         double* wsum);

} // namespace kernels

// Numerically stabilized per-voxel softmax over the channel axis.
Tensor4 softmax_channels(const Tensor4& logits);

} // namespace volwindow

#endif
