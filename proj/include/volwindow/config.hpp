#ifndef VOLWINDOW_CONFIG_HPP
#define VOLWINDOW_CONFIG_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "volwindow/augment.hpp"
#include "volwindow/dynunet.hpp"
#include "volwindow/preprocess.hpp"
#include "volwindow/swinfer.hpp"

namespace volwindow {

// Whole-pipeline configuration. Field names are the contract for the JSON
// config file; precedence is command-line flag > config file > default.
struct PipelineConfig {
    PreprocessConfig preprocess;
    CropConfig crop;
    ArchSpec arch;
    std::array<int, 3> roi{128, 128, 128};
    double overlap = 0.75;
    BlendMode blend;
    std::vector<std::string> model_paths;
    int connectivity = 26;
    std::uint64_t seed = 0;
    VoteMode vote = VoteMode::mean_probability;

    void validate() const;
};

// Overwrites only the fields present in the JSON document.
void apply_config_json(PipelineConfig& cfg, const nlohmann::json& j);

PipelineConfig load_pipeline_config(const std::string& path);

nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg);

} // namespace volwindow

#endif
