#ifndef VOLWINDOW_DYNUNET_HPP
#define VOLWINDOW_DYNUNET_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "volwindow/kernels.hpp"
#include "volwindow/tensor.hpp"

namespace volwindow {

enum class NormKind { instance, none };

// Encoder-decoder with strided convolutions for downsampling and a
// convolutional residual projection per encoder level.
struct ArchSpec {
    int in_channels = 1;
    int out_channels = 2;
    std::vector<int> filters{32, 64, 128, 256, 320, 320};
    std::vector<std::array<int, 3>> strides{{1, 1, 1}, {2, 2, 2}, {2, 2, 2},
                                            {2, 2, 2}, {2, 2, 2}, {2, 2, 1}};
    int kernel = 3;
    NormKind norm = NormKind::instance;

    int levels() const { return static_cast<int>(filters.size()); }
    void validate() const;
};

nlohmann::json arch_to_json(const ArchSpec& arch);
ArchSpec arch_from_json(const nlohmann::json& j);

struct ShapePlan {
    std::array<int, 3> input_shape{};
    // Spatial extent of the level-l encoder output (cumulative stride
    // division); the decoder mirrors these back up to input_shape.
    std::vector<std::array<int, 3>> level_shapes;
};

// Per-axis product of all stride components; input extents must divide it.
std::array<int, 3> stride_divisors(const ArchSpec& arch);

ShapePlan shape_plan(const ArchSpec& arch, std::array<int, 3> input_shape);

enum class TensorKind { conv_weight, upconv_weight, bias, norm_scale, norm_shift };

struct TensorInfo {
    std::string name;
    std::vector<int> shape;
    TensorKind kind;
    std::int64_t count() const {
        std::int64_t n = 1;
        for (int s : shape) n *= s;
        return n;
    }
};

// Canonical tensor order and shapes for an architecture (also the
// serialization order).
std::vector<TensorInfo> param_plan(const ArchSpec& arch);

struct ConvBlockParams {
    std::vector<float> conv_w, conv_b, norm_scale, norm_shift;
};

struct EncoderLevelParams {
    ConvBlockParams block1, block2;
    std::vector<float> proj_w, proj_b;
};

struct DecoderStageParams {
    std::vector<float> up_w, up_b;
    ConvBlockParams block1, block2;
};

struct ModelParams {
    ArchSpec arch;
    std::vector<EncoderLevelParams> encoder;       // one per level
    std::vector<DecoderStageParams> decoder;       // decoder[i] emits level-i features
    std::vector<float> head_up_w, head_up_b;       // only when strides[0] != (1,1,1)
    std::vector<float> out_w, out_b;               // final 1x1x1 conv

    // Shapes must match param_plan(arch) exactly; all values finite.
    void validate() const;
};

// Kaiming fan-in normal conv kernels, zero biases, unit norm scales, zero
// shifts. Deterministic per (arch, seed), independent of evaluation order.
ModelParams init_params(const ArchSpec& arch, std::uint64_t seed);

// Full forward pass: patch (in_channels, x, y, z) -> logits
// (out_channels, x, y, z). ExecMode::serial is the plain-loop reference,
// ExecMode::parallel the OpenMP path; they agree within 1e-5 relative.
Tensor4 forward(const ModelParams& params, const Tensor4& patch,
                ExecMode exec = ExecMode::parallel);

// Flat binary container: u64-LE length of the JSON index, the JSON index
// (arch + tensor name/shape/offset table), then little-endian float32 data.
void save_params(const ModelParams& params, const std::string& path);
ModelParams load_params(const std::string& path);

} // namespace volwindow

#endif
