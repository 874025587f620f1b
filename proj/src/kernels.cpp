#include "volwindow/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "volwindow/errors.hpp"

namespace volwindow::kernels {

namespace {

void check_conv_args(const Tensor4& in, std::array<int, 3> kernel, std::array<int, 3> stride) {
    for (int a = 0; a < 3; ++a) {
        if (kernel[a] < 1 || kernel[a] % 2 == 0)
            throw argument_error("conv3d: kernel extent must be odd and positive");
        if (stride[a] < 1) throw argument_error("conv3d: stride must be >= 1");
        if (in.shape[a] % stride[a] != 0)
            throw shape_error("conv3d: input extent " + std::to_string(in.shape[a]) +
                              " not divisible by stride " + std::to_string(stride[a]) +
                              " on axis " + std::to_string(a));
    }
}

} // namespace

void conv3d_ref(const Tensor4& in, const float* weights, const float* bias, int out_channels,
                std::array<int, 3> kernel, std::array<int, 3> stride, Tensor4& out) {
    check_conv_args(in, kernel, stride);
    const int nx = in.shape[0], ny = in.shape[1], nz = in.shape[2];
    const int ox = nx / stride[0], oy = ny / stride[1], oz = nz / stride[2];
    const int px = kernel[0] / 2, py = kernel[1] / 2, pz = kernel[2] / 2;
    out = Tensor4(out_channels, {ox, oy, oz});

    const std::int64_t ktap = static_cast<std::int64_t>(kernel[0]) * kernel[1] * kernel[2];
    for (int co = 0; co < out_channels; ++co) {
        for (int z = 0; z < oz; ++z)
            for (int y = 0; y < oy; ++y)
                for (int x = 0; x < ox; ++x) {
                    double acc = bias[co];
                    for (int ci = 0; ci < in.channels; ++ci) {
                        const float* w = weights + (co * in.channels + ci) * ktap;
                        const float* src = in.channel(ci);
                        for (int kz = 0; kz < kernel[2]; ++kz) {
                            int sz = z * stride[2] + kz - pz;
                            if (sz < 0 || sz >= nz) continue;
                            for (int ky = 0; ky < kernel[1]; ++ky) {
                                int sy = y * stride[1] + ky - py;
                                if (sy < 0 || sy >= ny) continue;
                                for (int kx = 0; kx < kernel[0]; ++kx) {
                                    int sx = x * stride[0] + kx - px;
                                    if (sx < 0 || sx >= nx) continue;
                                    acc += static_cast<double>(
                                               w[(kz * kernel[1] + ky) * kernel[0] + kx]) *
                                           src[sx + static_cast<std::int64_t>(nx) *
                                                        (sy + static_cast<std::int64_t>(ny) * sz)];
                                }
                            }
                        }
                    }
                    out.at(co, x, y, z) = static_cast<float>(acc);
                }
    }
}

void conv3d_omp(const Tensor4& in, const float* weights, const float* bias, int out_channels,
                std::array<int, 3> kernel, std::array<int, 3> stride, Tensor4& out) {
    check_conv_args(in, kernel, stride);
    const int nx = in.shape[0], ny = in.shape[1], nz = in.shape[2];
    const int ox = nx / stride[0], oy = ny / stride[1], oz = nz / stride[2];
    const int px = kernel[0] / 2, py = kernel[1] / 2, pz = kernel[2] / 2;
    out = Tensor4(out_channels, {ox, oy, oz});

    const std::int64_t ktap = static_cast<std::int64_t>(kernel[0]) * kernel[1] * kernel[2];
    const std::int64_t in_plane = static_cast<std::int64_t>(nx) * ny;

    // Each (co, z) slab is written by exactly one thread; per-output-voxel
    // accumulation order is fixed, so results are thread-count independent.
#pragma omp parallel for collapse(2) schedule(static)
    for (int co = 0; co < out_channels; ++co) {
        for (int z = 0; z < oz; ++z) {
            float* dst = out.channel(co) + static_cast<std::int64_t>(z) * ox * oy;
            for (int y = 0; y < oy; ++y) {
                for (int x = 0; x < ox; ++x) {
                    double acc = bias[co];
                    for (int ci = 0; ci < in.channels; ++ci) {
                        const float* w = weights + (co * in.channels + ci) * ktap;
                        const float* src = in.channel(ci);
                        for (int kz = 0; kz < kernel[2]; ++kz) {
                            const int sz = z * stride[2] + kz - pz;
                            if (sz < 0 || sz >= nz) continue;
                            const float* plane = src + sz * in_plane;
                            for (int ky = 0; ky < kernel[1]; ++ky) {
                                const int sy = y * stride[1] + ky - py;
                                if (sy < 0 || sy >= ny) continue;
                                const float* row = plane + static_cast<std::int64_t>(sy) * nx;
                                const float* wrow = w + (kz * kernel[1] + ky) * kernel[0];
                                const int x0 = x * stride[0] - px;
                                const int klo = std::max(0, -x0);
                                const int khi = std::min(kernel[0], nx - x0);
                                for (int kx = klo; kx < khi; ++kx)
                                    acc += static_cast<double>(wrow[kx]) * row[x0 + kx];
                            }
                        }
                    }
                    dst[y * ox + x] = static_cast<float>(acc);
                }
            }
        }
    }
}

Tensor4 conv3d(const Tensor4& in, const float* weights, const float* bias, int out_channels,
               std::array<int, 3> kernel, std::array<int, 3> stride, ExecMode mode) {
    Tensor4 out;
    if (mode == ExecMode::serial)
        conv3d_ref(in, weights, bias, out_channels, kernel, stride, out);
    else
        conv3d_omp(in, weights, bias, out_channels, kernel, stride, out);
    return out;
}

void conv3d_transposed_ref(const Tensor4& in, const float* weights, const float* bias,
                           int out_channels, std::array<int, 3> stride, Tensor4& out) {
    const int nx = in.shape[0], ny = in.shape[1], nz = in.shape[2];
    const int ox = nx * stride[0], oy = ny * stride[1], oz = nz * stride[2];
    out = Tensor4(out_channels, {ox, oy, oz});
    const std::int64_t ktap = static_cast<std::int64_t>(stride[0]) * stride[1] * stride[2];

    for (int co = 0; co < out_channels; ++co)
        for (int z = 0; z < oz; ++z)
            for (int y = 0; y < oy; ++y)
                for (int x = 0; x < ox; ++x) {
                    const int ix = x / stride[0], rx = x % stride[0];
                    const int iy = y / stride[1], ry = y % stride[1];
                    const int iz = z / stride[2], rz = z % stride[2];
                    const std::int64_t tap = (rz * stride[1] + ry) * stride[0] + rx;
                    double acc = bias[co];
                    for (int ci = 0; ci < in.channels; ++ci)
                        acc += static_cast<double>(
                                   weights[(ci * out_channels + co) * ktap + tap]) *
                               in.at(ci, ix, iy, iz);
                    out.at(co, x, y, z) = static_cast<float>(acc);
                }
}

void conv3d_transposed_omp(const Tensor4& in, const float* weights, const float* bias,
                           int out_channels, std::array<int, 3> stride, Tensor4& out) {
    const int nx = in.shape[0], ny = in.shape[1], nz = in.shape[2];
    const int ox = nx * stride[0], oy = ny * stride[1], oz = nz * stride[2];
    out = Tensor4(out_channels, {ox, oy, oz});
    const std::int64_t ktap = static_cast<std::int64_t>(stride[0]) * stride[1] * stride[2];

#pragma omp parallel for collapse(2) schedule(static)
    for (int co = 0; co < out_channels; ++co)
        for (int z = 0; z < oz; ++z) {
            const int iz = z / stride[2], rz = z % stride[2];
            for (int y = 0; y < oy; ++y) {
                const int iy = y / stride[1], ry = y % stride[1];
                for (int x = 0; x < ox; ++x) {
                    const int ix = x / stride[0], rx = x % stride[0];
                    const std::int64_t tap = (rz * stride[1] + ry) * stride[0] + rx;
                    double acc = bias[co];
                    for (int ci = 0; ci < in.channels; ++ci)
                        acc += static_cast<double>(
                                   weights[(ci * out_channels + co) * ktap + tap]) *
                               in.at(ci, ix, iy, iz);
                    out.at(co, x, y, z) = static_cast<float>(acc);
                }
            }
        }
}

Tensor4 conv3d_transposed(const Tensor4& in, const float* weights, const float* bias,
                          int out_channels, std::array<int, 3> stride, ExecMode mode) {
    Tensor4 out;
    if (mode == ExecMode::serial)
        conv3d_transposed_ref(in, weights, bias, out_channels, stride, out);
    else
        conv3d_transposed_omp(in, weights, bias, out_channels, stride, out);
    return out;
}

void instance_norm(Tensor4& t, const float* scale, const float* shift, float eps,
                   ExecMode mode) {
    const std::int64_t n = t.spatial_size();
    auto normalize_channel = [&](int c) {
        float* p = t.channel(c);
        double mean = 0.0;
        for (std::int64_t i = 0; i < n; ++i) mean += p[i];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            double d = p[i] - mean;
            var += d * d;
        }
        var /= static_cast<double>(n);
        const double inv = 1.0 / std::sqrt(var + eps);
        const double a = scale[c] * inv;
        const double b = shift[c] - mean * a;
        for (std::int64_t i = 0; i < n; ++i)
            p[i] = static_cast<float>(p[i] * a + b);
    };
    if (mode == ExecMode::serial) {
        for (int c = 0; c < t.channels; ++c) normalize_channel(c);
    } else {
#pragma omp parallel for schedule(static)
        for (int c = 0; c < t.channels; ++c) normalize_channel(c);
    }
}

void leaky_relu(Tensor4& t, float slope) {
    for (auto& v : t.data)
        if (v < 0.0f) v *= slope;
}

Tensor4 concat_channels(const Tensor4& a, const Tensor4& b) {
    if (a.shape != b.shape)
        throw shape_error("concat_channels: spatial shapes differ");
    Tensor4 out(a.channels + b.channels, a.shape);
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.data.size());
    return out;
}

namespace {

inline float sample_trilinear(const float* in, std::array<int, 3> s, double ux, double uy,
                              double uz) {
    ux = std::clamp(ux, 0.0, static_cast<double>(s[0] - 1));
    uy = std::clamp(uy, 0.0, static_cast<double>(s[1] - 1));
    uz = std::clamp(uz, 0.0, static_cast<double>(s[2] - 1));
    const int x0 = static_cast<int>(ux), y0 = static_cast<int>(uy), z0 = static_cast<int>(uz);
    const int x1 = std::min(x0 + 1, s[0] - 1);
    const int y1 = std::min(y0 + 1, s[1] - 1);
    const int z1 = std::min(z0 + 1, s[2] - 1);
    const double fx = ux - x0, fy = uy - y0, fz = uz - z0;
    auto v = [&](int x, int y, int z) -> double {
        return in[x + static_cast<std::int64_t>(s[0]) *
                          (y + static_cast<std::int64_t>(s[1]) * z)];
    };
    const double c00 = v(x0, y0, z0) * (1 - fx) + v(x1, y0, z0) * fx;
    const double c10 = v(x0, y1, z0) * (1 - fx) + v(x1, y1, z0) * fx;
    const double c01 = v(x0, y0, z1) * (1 - fx) + v(x1, y0, z1) * fx;
    const double c11 = v(x0, y1, z1) * (1 - fx) + v(x1, y1, z1) * fx;
    const double c0 = c00 * (1 - fy) + c10 * fy;
    const double c1 = c01 * (1 - fy) + c11 * fy;
    return static_cast<float>(c0 * (1 - fz) + c1 * fz);
}

} // namespace

void resample_trilinear_ref(const float* in, std::array<int, 3> in_shape, float* out,
                            std::array<int, 3> out_shape, std::array<double, 3> scale) {
    std::int64_t i = 0;
    for (int z = 0; z < out_shape[2]; ++z)
        for (int y = 0; y < out_shape[1]; ++y)
            for (int x = 0; x < out_shape[0]; ++x)
                out[i++] = sample_trilinear(in, in_shape, x * scale[0], y * scale[1],
                                            z * scale[2]);
}

void resample_trilinear_omp(const float* in, std::array<int, 3> in_shape, float* out,
                            std::array<int, 3> out_shape, std::array<double, 3> scale) {
    const std::int64_t plane = static_cast<std::int64_t>(out_shape[0]) * out_shape[1];
#pragma omp parallel for schedule(static)
    for (int z = 0; z < out_shape[2]; ++z) {
        float* dst = out + z * plane;
        for (int y = 0; y < out_shape[1]; ++y)
            for (int x = 0; x < out_shape[0]; ++x)
                dst[y * out_shape[0] + x] =
                    sample_trilinear(in, in_shape, x * scale[0], y * scale[1], z * scale[2]);
    }
}

void accumulate_tile_ref(const Tensor4& pred, const std::vector<double>& weights,
                         std::array<int, 3> start, std::array<int, 3> vol_shape, double* sum,
                         double* wsum) {
    const auto roi = pred.shape;
    const std::int64_t vol_voxels =
        static_cast<std::int64_t>(vol_shape[0]) * vol_shape[1] * vol_shape[2];
    for (int z = 0; z < roi[2]; ++z)
        for (int y = 0; y < roi[1]; ++y)
            for (int x = 0; x < roi[0]; ++x) {
                const std::int64_t wi =
                    x + static_cast<std::int64_t>(roi[0]) *
                            (y + static_cast<std::int64_t>(roi[1]) * z);
                const std::int64_t vi =
                    (start[0] + x) +
                    static_cast<std::int64_t>(vol_shape[0]) *
                        ((start[1] + y) +
                         static_cast<std::int64_t>(vol_shape[1]) * (start[2] + z));
                const double w = weights[wi];
                wsum[vi] += w;
                for (int c = 0; c < pred.channels; ++c)
                    sum[c * vol_voxels + vi] += w * pred.at(c, x, y, z);
            }
}

void accumulate_tile_omp(const Tensor4& pred, const std::vector<double>& weights,
                         std::array<int, 3> start, std::array<int, 3> vol_shape, double* sum,
                         double* wsum) {
    const auto roi = pred.shape;
    const std::int64_t vol_voxels =
        static_cast<std::int64_t>(vol_shape[0]) * vol_shape[1] * vol_shape[2];
    // Voxels of one tile are disjoint buffer slots; tile-level ordering is
    // the caller's responsibility (fixed lexicographic order for
    // determinism).
#pragma omp parallel for schedule(static)
    for (int z = 0; z < roi[2]; ++z)
        for (int y = 0; y < roi[1]; ++y)
            for (int x = 0; x < roi[0]; ++x) {
                const std::int64_t wi =
                    x + static_cast<std::int64_t>(roi[0]) *
                            (y + static_cast<std::int64_t>(roi[1]) * z);
                const std::int64_t vi =
                    (start[0] + x) +
                    static_cast<std::int64_t>(vol_shape[0]) *
                        ((start[1] + y) +
                         static_cast<std::int64_t>(vol_shape[1]) * (start[2] + z));
                const double w = weights[wi];
                wsum[vi] += w;
                for (int c = 0; c < pred.channels; ++c)
                    sum[c * vol_voxels + vi] += w * pred.at(c, x, y, z);
            }
}

} // namespace volwindow::kernels

namespace volwindow {

Tensor4 softmax_channels(const Tensor4& logits) {
    if (logits.channels < 1)
        throw argument_error("softmax_channels: need at least one channel");
    Tensor4 out(logits.channels, logits.shape);
    const std::int64_t n = logits.spatial_size();
    std::vector<double> e(logits.channels);
    for (std::int64_t v = 0; v < n; ++v) {
        double m = logits.data[v];
        for (int c = 1; c < logits.channels; ++c)
            m = std::max(m, static_cast<double>(logits.data[c * n + v]));
        double denom = 0.0;
        for (int c = 0; c < logits.channels; ++c) {
            e[c] = std::exp(static_cast<double>(logits.data[c * n + v]) - m);
            denom += e[c];
        }
        for (int c = 0; c < logits.channels; ++c)
            out.data[c * n + v] = static_cast<float>(e[c] / denom);
    }
    return out;
}

} // namespace volwindow
