#include "volwindow/cli.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "volwindow/augment.hpp"
#include "volwindow/config.hpp"
#include "volwindow/dynunet.hpp"
#include "volwindow/errors.hpp"
#include "volwindow/log.hpp"
#include "volwindow/metrics.hpp"
#include "volwindow/nifti.hpp"
#include "volwindow/phantom.hpp"
#include "volwindow/preprocess.hpp"
#include "volwindow/rng.hpp"
#include "volwindow/swinfer.hpp"
#include "volwindow/trainmath.hpp"

namespace volwindow::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

template <typename T>
std::array<T, 3> parse_triple(const std::string& text, const char* what) {
    std::array<T, 3> out{};
    std::stringstream ss(text);
    std::string tok;
    std::vector<T> vals;
    while (std::getline(ss, tok, ',')) {
        try {
            if constexpr (std::is_integral_v<T>)
                vals.push_back(static_cast<T>(std::stoll(tok)));
            else
                vals.push_back(static_cast<T>(std::stod(tok)));
        } catch (const std::exception&) {
            throw argument_error(std::string(what) + ": cannot parse '" + tok + "'");
        }
    }
    if (vals.size() == 1) vals = {vals[0], vals[0], vals[0]};
    if (vals.size() != 3)
        throw argument_error(std::string(what) + ": expected 1 or 3 comma-separated values");
    std::copy(vals.begin(), vals.end(), out.begin());
    return out;
}

ExecMode parse_exec(const std::string& text) {
    if (text == "serial") return ExecMode::serial;
    if (text == "parallel") return ExecMode::parallel;
    throw argument_error("--exec must be 'serial' or 'parallel'");
}

double elapsed_seconds(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const { return elapsed_seconds(t0); }
};

// Flag/config/default resolution: a subcommand declares optionals, the
// config file fills a PipelineConfig, and present flags win field by field.
struct ConfigLayer {
    std::optional<std::string> config_path;
    PipelineConfig resolved;

    void resolve() {
        if (config_path) resolved = load_pipeline_config(*config_path);
    }
};

PatchPredictor make_predictor(const ModelParams& params, ExecMode exec) {
    return [&params, exec](const Tensor4& patch) {
        return softmax_channels(forward(params, patch, exec));
    };
}

Volume lesion_probability(const std::vector<ProbVolume>& models) {
    Volume prob;
    prob.shape = models.front().probs.shape;
    prob.spacing = models.front().spacing;
    prob.affine = models.front().affine;
    prob.orientation_code = models.front().orientation_code;
    prob.data.resize(static_cast<std::size_t>(prob.voxels()));
    const std::int64_t n = models.front().probs.spatial_size();
    const double inv = 1.0 / static_cast<double>(models.size());
    for (std::int64_t v = 0; v < n; ++v) {
        double acc = 0.0;
        for (const auto& m : models) acc += m.probs.data[n + v]; // channel 1
        prob.data[v] = static_cast<float>(acc * inv);
    }
    return prob;
}

// ---- subcommand bodies ----------------------------------------------------

int cmd_preprocess(const std::string& input, const std::string& output,
                   const PipelineConfig& cfg, ExecMode exec, std::ostream& out) {
    Volume v = read_nifti(input);
    auto [processed, report] = run_preprocess(v, cfg.preprocess, exec);
    write_nifti(processed, output);
    json j;
    j["replaced_nans"] = report.replaced_nans;
    j["lo"] = report.lo;
    j["hi"] = report.hi;
    j["out_shape"] = report.out_shape;
    j["degenerate"] = report.degenerate;
    out << j.dump() << "\n";
    return 0;
}

int cmd_sample(const std::string& image_path, const std::string& label_path,
               const std::string& out_dir, int count, double flip_prob, double rot_prob,
               const PipelineConfig& cfg, std::ostream& out) {
    if (count < 1) throw argument_error("--count must be >= 1");
    Volume image = read_nifti(image_path);
    MaskVolume label = read_nifti_mask(label_path);
    fs::create_directories(out_dir);

    const CounterRng root(cfg.crop.seed);
    json crops = json::array();
    for (int i = 0; i < count; ++i) {
        CounterRng rng = root.split(static_cast<std::uint64_t>(i));
        CropSample s = sample_balanced_crop(image, label, cfg.crop, rng);
        const auto flips = random_flip(s.image, s.label, flip_prob, rng);
        const auto rots = random_rot90(s.image, s.label, rot_prob, rng);

        char name[32];
        std::snprintf(name, sizeof(name), "crop_%03d", i);
        const std::string img_file = (fs::path(out_dir) / (std::string(name) + "_img.nii.gz")).string();
        const std::string lbl_file = (fs::path(out_dir) / (std::string(name) + "_lbl.nii.gz")).string();
        write_nifti(s.image, img_file);
        write_nifti(s.label, lbl_file);

        crops.push_back({{"index", i},
                         {"center", s.center},
                         {"center_class", s.center_class == CenterClass::positive ? "pos" : "neg"},
                         {"fallback", s.fallback},
                         {"flips", flips},
                         {"rotations", rots},
                         {"image", img_file},
                         {"label", lbl_file}});
    }
    json j;
    j["seed"] = cfg.crop.seed;
    j["crop_size"] = cfg.crop.crop_size;
    j["crops"] = crops;
    out << j.dump() << "\n";
    return 0;
}

int cmd_plan(std::array<int, 3> shape, const PipelineConfig& cfg, std::ostream& out) {
    const TilePlan plan = plan_tiles(shape, cfg.roi, cfg.overlap);
    json tiles = json::array();
    for (const auto& t : plan.tiles) tiles.push_back({{"start", t.start}, {"end", t.end}});
    json j;
    j["roi"] = plan.roi;
    j["overlap"] = plan.overlap;
    j["padded_shape"] = plan.padded_shape;
    j["count"] = plan.tiles.size();
    j["tiles"] = tiles;
    out << j.dump() << "\n";
    return 0;
}

int cmd_infer(const std::string& input, const std::string& output,
              const std::string& probs_path, const PipelineConfig& cfg, ExecMode exec,
              std::ostream& out) {
    if (cfg.model_paths.empty())
        throw argument_error("infer: no models given (--model or config model_paths)");
    Volume volume = read_nifti(input);
    for (float v : volume.data)
        if (!std::isfinite(v))
            throw argument_error("infer: input contains non-finite values; run preprocess first");

    Timer timer;
    std::vector<ModelParams> params;
    params.reserve(cfg.model_paths.size());
    for (const auto& path : cfg.model_paths) {
        params.push_back(load_params(path));
        shape_plan(params.back().arch, cfg.roi); // roi must fit the model
    }

    std::vector<ProbVolume> prob_volumes;
    prob_volumes.reserve(params.size());
    for (const auto& p : params) {
        log_info("running sliding-window inference for model " +
                 std::to_string(prob_volumes.size()));
        prob_volumes.push_back(sliding_window_infer(volume, make_predictor(p, exec), cfg.roi,
                                                    cfg.overlap, cfg.blend, exec));
    }
    MaskVolume mask = ensemble_vote(prob_volumes, cfg.vote);
    write_nifti(mask, output);
    if (!probs_path.empty()) write_nifti(lesion_probability(prob_volumes), probs_path);

    const TilePlan plan = plan_tiles(volume.shape, cfg.roi, cfg.overlap);
    json j;
    j["tiles"] = plan.tiles.size();
    j["roi"] = cfg.roi;
    j["overlap"] = cfg.overlap;
    j["models"] = cfg.model_paths.size();
    j["seconds"] = timer.seconds();
    out << j.dump() << "\n";
    return 0;
}

std::vector<std::pair<std::string, std::string>> pair_cases(const std::string& pred,
                                                            const std::string& gt) {
    std::vector<std::pair<std::string, std::string>> cases;
    const bool pred_dir = fs::is_directory(pred);
    const bool gt_dir = fs::is_directory(gt);
    if (pred_dir != gt_dir)
        throw argument_error("eval: --pred and --gt must both be files or both directories");
    if (!pred_dir) {
        if (!fs::exists(pred)) throw io_error("eval: missing file: " + pred);
        if (!fs::exists(gt)) throw io_error("eval: missing file: " + gt);
        cases.emplace_back(pred, gt);
        return cases;
    }
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(pred))
        if (e.is_regular_file()) names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    for (const auto& name : names) {
        const fs::path gt_path = fs::path(gt) / name;
        if (fs::exists(gt_path))
            cases.emplace_back((fs::path(pred) / name).string(), gt_path.string());
        else
            log_warn("eval: no ground-truth partner for " + name);
    }
    if (cases.empty()) throw argument_error("eval: no prediction/ground-truth pairs found");
    return cases;
}

int cmd_eval(const std::string& pred, const std::string& gt, const PipelineConfig& cfg,
             std::ostream& out) {
    const auto cases = pair_cases(pred, gt);
    std::vector<json> case_json(cases.size());
    std::vector<std::string> errors(cases.size());
    std::vector<int> error_codes(cases.size(), 0);

    const int n = static_cast<int>(cases.size());
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        try {
            MaskVolume p = read_nifti_mask(cases[i].first);
            MaskVolume g = read_nifti_mask(cases[i].second);
            MetricsReport r = evaluate_case(p, g, cfg.connectivity);
            json cj;
            cj["case"] = fs::path(cases[i].first).filename().string();
            cj["dice"] = r.dice;
            cj["fnv_ml"] = r.fnv_ml;
            cj["fpv_ml"] = r.fpv_ml;
            cj["n_pred_components"] = r.n_pred_components;
            cj["n_gt_components"] = r.n_gt_components;
            cj["voxel_volume_ml"] = r.voxel_volume_ml;
            case_json[i] = std::move(cj);
        } catch (const io_error& e) {
            errors[i] = e.what();
            error_codes[i] = 2;
        } catch (const std::exception& e) {
            errors[i] = e.what();
            error_codes[i] = 1;
        }
    }
    for (int i = 0; i < n; ++i)
        if (!errors[i].empty()) {
            if (error_codes[i] == 2) throw io_error(errors[i]);
            throw error(errors[i]);
        }

    double mean_dice = 0.0, mean_fnv = 0.0, mean_fpv = 0.0;
    for (const auto& cj : case_json) {
        mean_dice += cj.at("dice").get<double>();
        mean_fnv += cj.at("fnv_ml").get<double>();
        mean_fpv += cj.at("fpv_ml").get<double>();
    }
    json j;
    j["cases"] = case_json;
    j["aggregate"] = {{"mean_dice", mean_dice / n},
                      {"mean_fnv_ml", mean_fnv / n},
                      {"mean_fpv_ml", mean_fpv / n},
                      {"cases", n}};
    out << j.dump() << "\n";
    return 0;
}

int cmd_loss_check(int instances, std::uint64_t seed, std::ostream& out) {
    if (instances < 1) throw argument_error("--instances must be >= 1");
    CounterRng rng(seed);
    const LossConfig cfg;
    const double h = 1e-5;
    double max_rel = 0.0;

    for (int inst = 0; inst < instances; ++inst) {
        const int channels = 2 + static_cast<int>(rng.uniform_below(2));
        const int n = 1 + static_cast<int>(rng.uniform_below(16));
        std::vector<double> logits(static_cast<std::size_t>(channels) * n);
        std::vector<double> target(logits.size(), 0.0);
        for (auto& z : logits) z = rng.normal() * 2.0;
        for (int v = 0; v < n; ++v)
            target[rng.uniform_below(channels) * n + v] = 1.0;

        const auto grad = dice_ce_grad(logits, target, channels, cfg);
        for (std::size_t i = 0; i < logits.size(); ++i) {
            const double keep = logits[i];
            logits[i] = keep + h;
            const double lp = dice_ce_loss(logits, target, channels, cfg);
            logits[i] = keep - h;
            const double lm = dice_ce_loss(logits, target, channels, cfg);
            logits[i] = keep;
            const double fd = (lp - lm) / (2.0 * h);
            const double rel = std::abs(grad[i] - fd) /
                               std::max({std::abs(grad[i]), std::abs(fd), 1e-3});
            max_rel = std::max(max_rel, rel);
        }
    }
    const bool pass = max_rel < 1e-5;
    json j;
    j["instances"] = instances;
    j["max_rel_err"] = max_rel;
    j["tolerance"] = 1e-5;
    j["pass"] = pass;
    out << j.dump() << "\n";
    return pass ? 0 : 1;
}

int cmd_demo(const std::string& out_dir, std::uint64_t seed, int n_models, ExecMode exec,
             std::ostream& out) {
    if (n_models < 1) throw argument_error("--models must be >= 1");
    Timer timer;
    fs::create_directories(out_dir);

    PhantomSpec spec;
    spec.seed = seed;
    PhantomCase phantom = make_phantom(spec);
    write_nifti(phantom.pet, (fs::path(out_dir) / "phantom_pet.nii.gz").string());
    write_nifti(phantom.gt, (fs::path(out_dir) / "phantom_gt.nii.gz").string());

    PreprocessConfig pre_cfg; // defaults: [2,2,3] spacing, 0.05/99.95 percentiles
    auto [processed, report] = run_preprocess(phantom.pet, pre_cfg, exec);
    write_nifti(processed, (fs::path(out_dir) / "preprocessed.nii.gz").string());

    ArchSpec arch;
    arch.filters = {8, 16};
    arch.strides = {{1, 1, 1}, {2, 2, 2}};
    const std::array<int, 3> roi{24, 24, 24};
    const double overlap = 0.25;

    std::vector<ModelParams> models;
    json model_files = json::array();
    for (int i = 0; i < n_models; ++i) {
        models.push_back(init_params(arch, seed + static_cast<std::uint64_t>(i)));
        const std::string path =
            (fs::path(out_dir) / ("model_" + std::to_string(i) + ".params")).string();
        save_params(models.back(), path);
        model_files.push_back(path);
    }

    BlendMode blend;
    std::vector<ProbVolume> prob_volumes;
    for (const auto& m : models)
        prob_volumes.push_back(
            sliding_window_infer(processed, make_predictor(m, exec), roi, overlap, blend, exec));
    MaskVolume mask = ensemble_vote(prob_volumes, VoteMode::mean_probability);
    const std::string mask_path = (fs::path(out_dir) / "mask.nii.gz").string();
    write_nifti(mask, mask_path);

    MetricsReport metrics = evaluate_case(mask, phantom.gt, 26);
    const TilePlan plan = plan_tiles(processed.shape, roi, overlap);

    json j;
    j["out_dir"] = out_dir;
    j["phantom_shape"] = spec.shape;
    j["preprocess"] = {{"replaced_nans", report.replaced_nans},
                       {"lo", report.lo},
                       {"hi", report.hi},
                       {"out_shape", report.out_shape}};
    j["models"] = model_files;
    j["roi"] = roi;
    j["overlap"] = overlap;
    j["tiles"] = plan.tiles.size();
    j["mask"] = mask_path;
    j["metrics"] = {{"dice", metrics.dice},
                    {"fnv_ml", metrics.fnv_ml},
                    {"fpv_ml", metrics.fpv_ml},
                    {"n_pred_components", metrics.n_pred_components},
                    {"n_gt_components", metrics.n_gt_components}};
    j["seconds"] = timer.seconds();
    out << j.dump() << "\n";
    return 0;
}

} // namespace

int run_subcommand(const std::vector<std::string>& args, std::ostream& out) {
    CLI::App app{"volwindow: sliding-window PET lesion segmentation toolkit"};
    app.require_subcommand(1);

    // shared state across subcommands
    struct {
        std::optional<std::string> config;
        std::optional<int> jobs;
        std::string exec = "parallel";
    } common;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "pipeline config JSON file");
        sub->add_option("--jobs", common.jobs, "worker thread count");
        sub->add_option("--exec", common.exec, "kernel execution mode (serial|parallel)");
    };

    auto resolve_config = [&]() {
        PipelineConfig cfg;
        if (common.config) {
            cfg = load_pipeline_config(*common.config);
        }
        return cfg;
    };

    // --- preprocess ---
    auto* sp = app.add_subcommand("preprocess", "nan-guard, RAS, resample, intensity scale");
    std::string pre_input, pre_output;
    std::optional<std::string> pre_spacing;
    std::optional<double> pre_lower, pre_upper;
    bool pre_clip_on = false, pre_clip_off = false, pre_nan_on = false, pre_nan_off = false;
    sp->add_option("--input", pre_input, "input NIfTI")->required();
    sp->add_option("--output", pre_output, "output NIfTI")->required();
    sp->add_option("--target-spacing", pre_spacing, "target spacing mm (x,y,z)");
    sp->add_option("--lower-percentile", pre_lower, "lower intensity percentile");
    sp->add_option("--upper-percentile", pre_upper, "upper intensity percentile");
    sp->add_flag("--clip", pre_clip_on, "clip to [0,1] after scaling");
    sp->add_flag("--no-clip", pre_clip_off, "disable clipping");
    sp->add_flag("--nan-guard", pre_nan_on, "replace non-finite voxels by 0");
    sp->add_flag("--no-nan-guard", pre_nan_off, "disable the NaN guard");
    add_common(sp);

    // --- sample ---
    auto* ss = app.add_subcommand("sample", "balanced crop sampling with augmentation");
    std::string smp_image, smp_label, smp_out = "crops";
    int smp_count = 1;
    std::optional<std::string> smp_crop;
    std::optional<double> smp_pos;
    std::optional<std::uint64_t> smp_seed;
    double smp_flip = 0.1, smp_rot = 0.1;
    ss->add_option("--image", smp_image, "image NIfTI")->required();
    ss->add_option("--label", smp_label, "label NIfTI")->required();
    ss->add_option("--out-dir", smp_out, "crop output directory");
    ss->add_option("--count", smp_count, "number of crops");
    ss->add_option("--crop-size", smp_crop, "crop size (x,y,z)");
    ss->add_option("--pos-ratio", smp_pos, "positive-center probability");
    ss->add_option("--seed", smp_seed, "sampling seed");
    ss->add_option("--flip-prob", smp_flip, "per-axis flip probability");
    ss->add_option("--rot-prob", smp_rot, "per-plane rotation probability");
    add_common(ss);

    // --- plan ---
    auto* spl = app.add_subcommand("plan", "enumerate sliding-window tiles");
    std::string plan_shape;
    std::optional<std::string> plan_roi;
    std::optional<double> plan_overlap;
    spl->add_option("--shape", plan_shape, "volume shape (x,y,z)")->required();
    spl->add_option("--roi", plan_roi, "tile size (x,y,z)");
    spl->add_option("--overlap", plan_overlap, "tile overlap fraction [0,1)");
    add_common(spl);

    // --- infer ---
    auto* si = app.add_subcommand("infer", "sliding-window ensemble inference");
    std::string inf_input, inf_output, inf_probs;
    std::vector<std::string> inf_models;
    std::optional<std::string> inf_roi, inf_blend, inf_vote;
    std::optional<double> inf_overlap, inf_sigma;
    si->add_option("--input", inf_input, "preprocessed input NIfTI")->required();
    si->add_option("--model", inf_models, "model params file (repeat for ensembles)");
    si->add_option("--output", inf_output, "output mask NIfTI")->required();
    si->add_option("--probs", inf_probs, "optional lesion-probability NIfTI");
    si->add_option("--roi", inf_roi, "tile size (x,y,z)");
    si->add_option("--overlap", inf_overlap, "tile overlap fraction [0,1)");
    si->add_option("--blend", inf_blend, "blend mode (constant|gaussian)");
    si->add_option("--sigma-scale", inf_sigma, "gaussian importance sigma scale");
    si->add_option("--vote", inf_vote, "ensemble vote (mean_probability|majority_label)");
    add_common(si);

    // --- eval ---
    auto* se = app.add_subcommand("eval", "Dice / FNV / FPV evaluation");
    std::string ev_pred, ev_gt;
    std::optional<int> ev_conn;
    se->add_option("--pred", ev_pred, "prediction mask or directory")->required();
    se->add_option("--gt", ev_gt, "ground-truth mask or directory")->required();
    se->add_option("--connectivity", ev_conn, "component connectivity (6|18|26)");
    add_common(se);

    // --- loss-check ---
    auto* sl = app.add_subcommand("loss-check", "DiceCE gradient check vs finite differences");
    int lc_instances = 100;
    std::uint64_t lc_seed = 0;
    sl->add_option("--instances", lc_instances, "number of random instances");
    sl->add_option("--seed", lc_seed, "rng seed");
    add_common(sl);

    // --- demo ---
    auto* sd = app.add_subcommand("demo", "synthetic phantom end-to-end run");
    std::string demo_out = "demo_out";
    std::optional<std::uint64_t> demo_seed;
    int demo_models = 3;
    sd->add_option("--out-dir", demo_out, "output directory");
    sd->add_option("--seed", demo_seed, "phantom/model seed");
    sd->add_option("--models", demo_models, "ensemble size");
    add_common(sd);

    std::vector<std::string> full;
    full.reserve(args.size() + 1);
    full.push_back("volwindow");
    full.insert(full.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& s : full) argv.push_back(s.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());

        if (common.jobs) {
            if (*common.jobs < 1) throw argument_error("--jobs must be >= 1");
            omp_set_num_threads(*common.jobs);
        }
        const ExecMode exec = parse_exec(common.exec);

        if (sp->parsed()) {
            PipelineConfig cfg = resolve_config();
            if (pre_spacing)
                cfg.preprocess.target_spacing = parse_triple<double>(*pre_spacing, "--target-spacing");
            if (pre_lower) cfg.preprocess.lower_percentile = *pre_lower;
            if (pre_upper) cfg.preprocess.upper_percentile = *pre_upper;
            if (pre_clip_on) cfg.preprocess.clip = true;
            if (pre_clip_off) cfg.preprocess.clip = false;
            if (pre_nan_on) cfg.preprocess.nan_guard = true;
            if (pre_nan_off) cfg.preprocess.nan_guard = false;
            cfg.preprocess.validate();
            return cmd_preprocess(pre_input, pre_output, cfg, exec, out);
        }
        if (ss->parsed()) {
            PipelineConfig cfg = resolve_config();
            if (smp_crop) cfg.crop.crop_size = parse_triple<int>(*smp_crop, "--crop-size");
            if (smp_pos) cfg.crop.pos_ratio = *smp_pos;
            if (smp_seed) cfg.crop.seed = *smp_seed;
            cfg.crop.validate();
            return cmd_sample(smp_image, smp_label, smp_out, smp_count, smp_flip, smp_rot, cfg,
                              out);
        }
        if (spl->parsed()) {
            PipelineConfig cfg = resolve_config();
            if (plan_roi) cfg.roi = parse_triple<int>(*plan_roi, "--roi");
            if (plan_overlap) cfg.overlap = *plan_overlap;
            return cmd_plan(parse_triple<int>(plan_shape, "--shape"), cfg, out);
        }
        if (si->parsed()) {
            PipelineConfig cfg = resolve_config();
            if (!inf_models.empty()) cfg.model_paths = inf_models;
            if (inf_roi) cfg.roi = parse_triple<int>(*inf_roi, "--roi");
            if (inf_overlap) cfg.overlap = *inf_overlap;
            if (inf_blend) {
                if (*inf_blend == "constant")
                    cfg.blend.kind = BlendKind::constant;
                else if (*inf_blend == "gaussian")
                    cfg.blend.kind = BlendKind::gaussian;
                else
                    throw argument_error("--blend must be 'constant' or 'gaussian'");
            }
            if (inf_sigma) cfg.blend.sigma_scale = *inf_sigma;
            if (inf_vote) {
                if (*inf_vote == "mean_probability")
                    cfg.vote = VoteMode::mean_probability;
                else if (*inf_vote == "majority_label")
                    cfg.vote = VoteMode::majority_label;
                else
                    throw argument_error("--vote must be 'mean_probability' or 'majority_label'");
            }
            cfg.validate();
            return cmd_infer(inf_input, inf_output, inf_probs, cfg, exec, out);
        }
        if (se->parsed()) {
            PipelineConfig cfg = resolve_config();
            if (ev_conn) cfg.connectivity = *ev_conn;
            cfg.validate();
            return cmd_eval(ev_pred, ev_gt, cfg, out);
        }
        if (sl->parsed()) {
            return cmd_loss_check(lc_instances, lc_seed, out);
        }
        if (sd->parsed()) {
            PipelineConfig cfg = resolve_config();
            const std::uint64_t seed = demo_seed ? *demo_seed : cfg.seed;
            return cmd_demo(demo_out, seed, demo_models, exec, out);
        }
        throw argument_error("no subcommand given");
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const io_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace volwindow::cli
