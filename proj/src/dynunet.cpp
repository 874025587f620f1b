#include "volwindow/dynunet.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>

#include "volwindow/errors.hpp"
#include "volwindow/rng.hpp"

namespace volwindow {

namespace {
constexpr float kNormEps = 1e-5f;
constexpr float kLeakySlope = 0.01f;
const char* kAxisNames[3] = {"x", "y", "z"};
} // namespace

void ArchSpec::validate() const {
    if (in_channels < 1 || out_channels < 1)
        throw argument_error("ArchSpec: channel counts must be positive");
    if (filters.size() != strides.size() || filters.size() < 2)
        throw argument_error("ArchSpec: filters and strides must have equal length >= 2");
    for (int f : filters)
        if (f < 1) throw argument_error("ArchSpec: filter counts must be positive");
    for (const auto& s : strides)
        for (int c : s)
            if (c != 1 && c != 2)
                throw argument_error("ArchSpec: stride components must be 1 or 2");
    if (kernel < 1 || kernel % 2 == 0)
        throw argument_error("ArchSpec: kernel must be odd and positive");
}

nlohmann::json arch_to_json(const ArchSpec& arch) {
    nlohmann::json j;
    j["in_channels"] = arch.in_channels;
    j["out_channels"] = arch.out_channels;
    j["filters"] = arch.filters;
    j["strides"] = arch.strides;
    j["kernel"] = arch.kernel;
    j["norm"] = arch.norm == NormKind::instance ? "instance" : "none";
    return j;
}

ArchSpec arch_from_json(const nlohmann::json& j) {
    ArchSpec a;
    if (j.contains("in_channels")) a.in_channels = j.at("in_channels").get<int>();
    if (j.contains("out_channels")) a.out_channels = j.at("out_channels").get<int>();
    if (j.contains("filters")) a.filters = j.at("filters").get<std::vector<int>>();
    if (j.contains("strides"))
        a.strides = j.at("strides").get<std::vector<std::array<int, 3>>>();
    if (j.contains("kernel")) a.kernel = j.at("kernel").get<int>();
    if (j.contains("norm")) {
        const std::string n = j.at("norm").get<std::string>();
        if (n == "instance")
            a.norm = NormKind::instance;
        else if (n == "none")
            a.norm = NormKind::none;
        else
            throw argument_error("unknown norm kind: " + n);
    }
    a.validate();
    return a;
}

std::array<int, 3> stride_divisors(const ArchSpec& arch) {
    std::array<int, 3> d{1, 1, 1};
    for (const auto& s : arch.strides)
        for (int a = 0; a < 3; ++a) d[a] *= s[a];
    return d;
}

ShapePlan shape_plan(const ArchSpec& arch, std::array<int, 3> input_shape) {
    arch.validate();
    const auto divisors = stride_divisors(arch);
    for (int a = 0; a < 3; ++a) {
        if (input_shape[a] < 1)
            throw shape_error("shape_plan: input extent must be positive");
        if (input_shape[a] % divisors[a] != 0)
            throw shape_error(std::string("shape_plan: axis ") + kAxisNames[a] + " extent " +
                              std::to_string(input_shape[a]) + " not divisible by " +
                              std::to_string(divisors[a]));
    }
    ShapePlan plan;
    plan.input_shape = input_shape;
    std::array<int, 3> cur = input_shape;
    for (int l = 0; l < arch.levels(); ++l) {
        for (int a = 0; a < 3; ++a) cur[a] /= arch.strides[l][a];
        plan.level_shapes.push_back(cur);
    }
    return plan;
}

std::vector<TensorInfo> param_plan(const ArchSpec& arch) {
    arch.validate();
    std::vector<TensorInfo> plan;
    const int k = arch.kernel;
    const int L = arch.levels();

    auto conv_block = [&](const std::string& prefix, int in_ch, int out_ch) {
        plan.push_back({prefix + ".weight", {out_ch, in_ch, k, k, k}, TensorKind::conv_weight});
        plan.push_back({prefix + ".bias", {out_ch}, TensorKind::bias});
    };
    auto norm_block = [&](const std::string& prefix, int ch) {
        plan.push_back({prefix + ".scale", {ch}, TensorKind::norm_scale});
        plan.push_back({prefix + ".shift", {ch}, TensorKind::norm_shift});
    };

    int in_ch = arch.in_channels;
    for (int l = 0; l < L; ++l) {
        const std::string p = "enc" + std::to_string(l);
        const int f = arch.filters[l];
        conv_block(p + ".conv1", in_ch, f);
        norm_block(p + ".norm1", f);
        conv_block(p + ".conv2", f, f);
        norm_block(p + ".norm2", f);
        plan.push_back({p + ".proj.weight", {f, in_ch, 1, 1, 1}, TensorKind::conv_weight});
        plan.push_back({p + ".proj.bias", {f}, TensorKind::bias});
        in_ch = f;
    }
    for (int i = L - 2; i >= 0; --i) {
        const std::string p = "dec" + std::to_string(i);
        const int f = arch.filters[i];
        const int f_below = arch.filters[i + 1];
        const auto& s = arch.strides[i + 1];
        plan.push_back({p + ".up.weight", {f_below, f, s[0], s[1], s[2]},
                        TensorKind::upconv_weight});
        plan.push_back({p + ".up.bias", {f}, TensorKind::bias});
        conv_block(p + ".conv1", 2 * f, f);
        norm_block(p + ".norm1", f);
        conv_block(p + ".conv2", f, f);
        norm_block(p + ".norm2", f);
    }
    if (arch.strides[0] != std::array<int, 3>{1, 1, 1}) {
        const int f0 = arch.filters[0];
        const auto& s = arch.strides[0];
        plan.push_back({"head.up.weight", {f0, f0, s[0], s[1], s[2]},
                        TensorKind::upconv_weight});
        plan.push_back({"head.up.bias", {f0}, TensorKind::bias});
    }
    plan.push_back({"out.weight", {arch.out_channels, arch.filters[0], 1, 1, 1},
                    TensorKind::conv_weight});
    plan.push_back({"out.bias", {arch.out_channels}, TensorKind::bias});
    return plan;
}

namespace {

// Visits every tensor in param_plan order; single source of truth for the
// name -> storage mapping used by init, validate, save, and load.
template <typename Params, typename Fn>
void for_each_tensor(Params& p, Fn&& fn) {
    const int L = p.arch.levels();
    if (static_cast<int>(p.encoder.size()) != L ||
        static_cast<int>(p.decoder.size()) != L - 1)
        throw shape_error("ModelParams: level count does not match the architecture");

    auto visit_block = [&](const std::string& prefix, auto& b) {
        fn(prefix + ".conv1.weight", b.block1.conv_w);
        fn(prefix + ".conv1.bias", b.block1.conv_b);
        fn(prefix + ".norm1.scale", b.block1.norm_scale);
        fn(prefix + ".norm1.shift", b.block1.norm_shift);
        fn(prefix + ".conv2.weight", b.block2.conv_w);
        fn(prefix + ".conv2.bias", b.block2.conv_b);
        fn(prefix + ".norm2.scale", b.block2.norm_scale);
        fn(prefix + ".norm2.shift", b.block2.norm_shift);
    };

    for (int l = 0; l < L; ++l) {
        const std::string prefix = "enc" + std::to_string(l);
        visit_block(prefix, p.encoder[l]);
        fn(prefix + ".proj.weight", p.encoder[l].proj_w);
        fn(prefix + ".proj.bias", p.encoder[l].proj_b);
    }
    for (int i = L - 2; i >= 0; --i) {
        const std::string prefix = "dec" + std::to_string(i);
        fn(prefix + ".up.weight", p.decoder[i].up_w);
        fn(prefix + ".up.bias", p.decoder[i].up_b);
        visit_block(prefix, p.decoder[i]);
    }
    if (p.arch.strides[0] != std::array<int, 3>{1, 1, 1}) {
        fn("head.up.weight", p.head_up_w);
        fn("head.up.bias", p.head_up_b);
    }
    fn("out.weight", p.out_w);
    fn("out.bias", p.out_b);
}

ModelParams allocate_params(const ArchSpec& arch) {
    ModelParams p;
    p.arch = arch;
    p.encoder.resize(arch.levels());
    p.decoder.resize(arch.levels() - 1);
    const auto plan = param_plan(arch);
    std::size_t i = 0;
    for_each_tensor(p, [&](const std::string& name, std::vector<float>& storage) {
        if (i >= plan.size() || plan[i].name != name)
            throw shape_error("ModelParams: tensor order mismatch at " + name);
        storage.assign(static_cast<std::size_t>(plan[i].count()), 0.0f);
        ++i;
    });
    return p;
}

} // namespace

void ModelParams::validate() const {
    const auto plan = param_plan(arch);
    std::size_t i = 0;
    for_each_tensor(*this, [&](const std::string& name, const std::vector<float>& storage) {
        if (i >= plan.size() || plan[i].name != name)
            throw shape_error("ModelParams: unexpected tensor " + name);
        if (static_cast<std::int64_t>(storage.size()) != plan[i].count())
            throw shape_error("ModelParams: tensor " + name + " has " +
                              std::to_string(storage.size()) + " values, expected " +
                              std::to_string(plan[i].count()));
        for (float v : storage)
            if (!std::isfinite(v))
                throw argument_error("ModelParams: non-finite value in tensor " + name);
        ++i;
    });
    if (i != plan.size()) throw shape_error("ModelParams: missing tensors");
}

ModelParams init_params(const ArchSpec& arch, std::uint64_t seed) {
    ModelParams p = allocate_params(arch);
    const auto plan = param_plan(arch);
    const CounterRng root(seed);
    std::size_t i = 0;
    for_each_tensor(p, [&](const std::string&, std::vector<float>& storage) {
        const TensorInfo& info = plan[i];
        switch (info.kind) {
            case TensorKind::conv_weight:
            case TensorKind::upconv_weight: {
                // conv weights are (out, in, taps); transposed are (in, out, taps)
                std::int64_t taps = 1;
                for (std::size_t d = 2; d < info.shape.size(); ++d) taps *= info.shape[d];
                const std::int64_t fan_in =
                    (info.kind == TensorKind::conv_weight ? info.shape[1] : info.shape[0]) * taps;
                const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
                CounterRng rng = root.split(i);
                for (auto& w : storage) w = static_cast<float>(rng.normal() * stddev);
                break;
            }
            case TensorKind::bias:
            case TensorKind::norm_shift:
                break; // stays zero
            case TensorKind::norm_scale:
                std::fill(storage.begin(), storage.end(), 1.0f);
                break;
        }
        ++i;
    });
    return p;
}

namespace {

void add_inplace(Tensor4& a, const Tensor4& b) {
    if (a.channels != b.channels || a.shape != b.shape)
        throw shape_error("residual add: shapes differ");
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

Tensor4 conv_block(const Tensor4& in, const ConvBlockParams& p, int out_ch, int kernel,
                   std::array<int, 3> stride, NormKind norm, ExecMode exec) {
    Tensor4 y = kernels::conv3d(in, p.conv_w.data(), p.conv_b.data(), out_ch,
                                {kernel, kernel, kernel}, stride, exec);
    if (norm == NormKind::instance)
        kernels::instance_norm(y, p.norm_scale.data(), p.norm_shift.data(), kNormEps, exec);
    return y;
}

} // namespace

Tensor4 forward(const ModelParams& params, const Tensor4& patch, ExecMode exec) {
    params.validate();
    const ArchSpec& arch = params.arch;
    if (patch.channels != arch.in_channels)
        throw shape_error("forward: patch has " + std::to_string(patch.channels) +
                          " channels, arch expects " + std::to_string(arch.in_channels));
    shape_plan(arch, patch.shape); // throws on divisibility violations
    const int L = arch.levels();
    const int k = arch.kernel;

    std::vector<Tensor4> features;
    features.reserve(L);
    const Tensor4* level_in = &patch;
    for (int l = 0; l < L; ++l) {
        const auto& ep = params.encoder[l];
        const int f = arch.filters[l];
        Tensor4 y = conv_block(*level_in, ep.block1, f, k, arch.strides[l], arch.norm, exec);
        kernels::leaky_relu(y, kLeakySlope);
        y = conv_block(y, ep.block2, f, k, {1, 1, 1}, arch.norm, exec);
        Tensor4 res = kernels::conv3d(*level_in, ep.proj_w.data(), ep.proj_b.data(), f,
                                      {1, 1, 1}, arch.strides[l], exec);
        add_inplace(y, res);
        kernels::leaky_relu(y, kLeakySlope);
        features.push_back(std::move(y));
        level_in = &features.back();
    }

    Tensor4 x = features[L - 1];
    for (int i = L - 2; i >= 0; --i) {
        const auto& dp = params.decoder[i];
        const int f = arch.filters[i];
        x = kernels::conv3d_transposed(x, dp.up_w.data(), dp.up_b.data(), f,
                                       arch.strides[i + 1], exec);
        x = kernels::concat_channels(x, features[i]);
        x = conv_block(x, dp.block1, f, k, {1, 1, 1}, arch.norm, exec);
        kernels::leaky_relu(x, kLeakySlope);
        x = conv_block(x, dp.block2, f, k, {1, 1, 1}, arch.norm, exec);
        kernels::leaky_relu(x, kLeakySlope);
    }
    if (arch.strides[0] != std::array<int, 3>{1, 1, 1})
        x = kernels::conv3d_transposed(x, params.head_up_w.data(), params.head_up_b.data(),
                                       arch.filters[0], arch.strides[0], exec);

    return kernels::conv3d(x, params.out_w.data(), params.out_b.data(), arch.out_channels,
                           {1, 1, 1}, {1, 1, 1}, exec);
}

void save_params(const ModelParams& params, const std::string& path) {
    params.validate();
    const auto plan = param_plan(params.arch);

    nlohmann::json index;
    index["format"] = "volwindow-params-v1";
    index["arch"] = arch_to_json(params.arch);
    nlohmann::json tensors = nlohmann::json::array();
    std::int64_t offset = 0;
    for (const auto& info : plan) {
        tensors.push_back({{"name", info.name}, {"shape", info.shape}, {"offset", offset}});
        offset += info.count() * static_cast<std::int64_t>(sizeof(float));
    }
    index["tensors"] = tensors;
    const std::string header = index.dump();

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw io_error("cannot open for writing: " + path);
    const std::uint64_t len = header.size();
    f.write(reinterpret_cast<const char*>(&len), sizeof(len));
    f.write(header.data(), static_cast<std::streamsize>(header.size()));
    for_each_tensor(params, [&](const std::string&, const std::vector<float>& storage) {
        f.write(reinterpret_cast<const char*>(storage.data()),
                static_cast<std::streamsize>(storage.size() * sizeof(float)));
    });
    if (!f) throw io_error("write failed: " + path);
}

ModelParams load_params(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open params file: " + path);
    std::uint64_t len = 0;
    f.read(reinterpret_cast<char*>(&len), sizeof(len));
    if (!f || len == 0 || len > (1ull << 30))
        throw format_error("corrupt params index length: " + path);
    std::string header(len, '\0');
    f.read(header.data(), static_cast<std::streamsize>(len));
    if (!f) throw io_error("truncated params index: " + path);

    nlohmann::json index;
    try {
        index = nlohmann::json::parse(header);
    } catch (const nlohmann::json::exception& e) {
        throw format_error("invalid params index JSON: " + std::string(e.what()));
    }
    if (index.value("format", "") != "volwindow-params-v1")
        throw format_error("unrecognized params container format: " + path);

    const ArchSpec arch = arch_from_json(index.at("arch"));
    ModelParams p = allocate_params(arch);
    const auto plan = param_plan(arch);
    const auto& tensors = index.at("tensors");
    if (tensors.size() != plan.size())
        throw format_error("params index lists " + std::to_string(tensors.size()) +
                           " tensors, arch requires " + std::to_string(plan.size()));

    std::size_t i = 0;
    for_each_tensor(p, [&](const std::string& name, std::vector<float>& storage) {
        const auto& entry = tensors.at(i);
        if (entry.at("name").get<std::string>() != name)
            throw format_error("params tensor order mismatch at " + name);
        f.read(reinterpret_cast<char*>(storage.data()),
               static_cast<std::streamsize>(storage.size() * sizeof(float)));
        if (!f) throw io_error("truncated params data at tensor " + name);
        ++i;
    });
    p.validate();
    return p;
}

} // namespace volwindow
