#include "volwindow/config.hpp"

#include <fstream>

#include "volwindow/errors.hpp"

namespace volwindow {

void PipelineConfig::validate() const {
    preprocess.validate();
    crop.validate();
    arch.validate();
    if (!(overlap >= 0.0 && overlap < 1.0))
        throw argument_error("overlap must be in [0, 1)");
    for (int r : roi)
        if (r < 1) throw argument_error("roi extents must be positive");
    if (!(blend.sigma_scale > 0.0)) throw argument_error("sigma_scale must be > 0");
    if (connectivity != 6 && connectivity != 18 && connectivity != 26)
        throw argument_error("connectivity must be 6, 18, or 26");
}

void apply_config_json(PipelineConfig& cfg, const nlohmann::json& j) {
    if (j.contains("preprocess")) {
        const auto& p = j.at("preprocess");
        if (p.contains("target_spacing"))
            cfg.preprocess.target_spacing = p.at("target_spacing").get<std::array<double, 3>>();
        if (p.contains("lower_percentile"))
            cfg.preprocess.lower_percentile = p.at("lower_percentile").get<double>();
        if (p.contains("upper_percentile"))
            cfg.preprocess.upper_percentile = p.at("upper_percentile").get<double>();
        if (p.contains("clip")) cfg.preprocess.clip = p.at("clip").get<bool>();
        if (p.contains("nan_guard")) cfg.preprocess.nan_guard = p.at("nan_guard").get<bool>();
    }
    if (j.contains("crop")) {
        const auto& c = j.at("crop");
        if (c.contains("crop_size"))
            cfg.crop.crop_size = c.at("crop_size").get<std::array<int, 3>>();
        if (c.contains("pos_ratio")) cfg.crop.pos_ratio = c.at("pos_ratio").get<double>();
        if (c.contains("seed")) cfg.crop.seed = c.at("seed").get<std::uint64_t>();
    }
    if (j.contains("arch")) cfg.arch = arch_from_json(j.at("arch"));
    if (j.contains("roi")) cfg.roi = j.at("roi").get<std::array<int, 3>>();
    if (j.contains("overlap")) cfg.overlap = j.at("overlap").get<double>();
    if (j.contains("blend")) {
        const auto& b = j.at("blend");
        if (b.contains("kind")) {
            const std::string kind = b.at("kind").get<std::string>();
            if (kind == "constant")
                cfg.blend.kind = BlendKind::constant;
            else if (kind == "gaussian")
                cfg.blend.kind = BlendKind::gaussian;
            else
                throw argument_error("unknown blend kind: " + kind);
        }
        if (b.contains("sigma_scale")) cfg.blend.sigma_scale = b.at("sigma_scale").get<double>();
    }
    if (j.contains("model_paths"))
        cfg.model_paths = j.at("model_paths").get<std::vector<std::string>>();
    if (j.contains("connectivity")) cfg.connectivity = j.at("connectivity").get<int>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("vote")) {
        const std::string v = j.at("vote").get<std::string>();
        if (v == "mean_probability")
            cfg.vote = VoteMode::mean_probability;
        else if (v == "majority_label")
            cfg.vote = VoteMode::majority_label;
        else
            throw argument_error("unknown vote mode: " + v);
    }
}

PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open config file: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw format_error("invalid config JSON in " + path + ": " + e.what());
    }
    PipelineConfig cfg;
    apply_config_json(cfg, j);
    cfg.validate();
    return cfg;
}

nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg) {
    nlohmann::json j;
    j["preprocess"] = {{"target_spacing", cfg.preprocess.target_spacing},
                       {"lower_percentile", cfg.preprocess.lower_percentile},
                       {"upper_percentile", cfg.preprocess.upper_percentile},
                       {"clip", cfg.preprocess.clip},
                       {"nan_guard", cfg.preprocess.nan_guard}};
    j["crop"] = {{"crop_size", cfg.crop.crop_size},
                 {"pos_ratio", cfg.crop.pos_ratio},
                 {"seed", cfg.crop.seed}};
    j["arch"] = arch_to_json(cfg.arch);
    j["roi"] = cfg.roi;
    j["overlap"] = cfg.overlap;
    j["blend"] = {{"kind", cfg.blend.kind == BlendKind::gaussian ? "gaussian" : "constant"},
                  {"sigma_scale", cfg.blend.sigma_scale}};
    j["model_paths"] = cfg.model_paths;
    j["connectivity"] = cfg.connectivity;
    j["seed"] = cfg.seed;
    j["vote"] = cfg.vote == VoteMode::mean_probability ? "mean_probability" : "majority_label";
    return j;
}

} // namespace volwindow
