#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eqa/eval.hpp"
#include "eqa/features.hpp"
#include "eqa/learner.hpp"

namespace eqa {

/// Input and output locations. Relative paths in a config file are resolved
/// against the file's directory.
struct RunPaths {
    std::filesystem::path corpus;
    std::filesystem::path annotations;
    /// Training questions.
    std::filesystem::path questions;
    /// Questions for predict, eval and ablate; falls back to `questions`.
    std::filesystem::path eval_questions;
    std::filesystem::path knowledge;
    std::filesystem::path embeddings;
    std::filesystem::path relations;
    std::filesystem::path rules;
    std::filesystem::path model;
    std::filesystem::path index;
    std::filesystem::path predictions;
    std::filesystem::path report;
    std::filesystem::path trace;

    bool operator==(const RunPaths&) const = default;
};

struct RunConfig {
    RunPaths paths;
    FeatureConfig features;
    TrainConfig train;
    AblationMode ablation_mode = AblationMode::retrain;
    /// Blocks named by --ablate (z1..z5, K).
    std::vector<std::string> ablate;

    bool operator==(const RunConfig&) const = default;
};

/// Reads {"paths": {...}, "hyper": {...}, "task_scheme", "negation",
/// "joint_review", "ablate", "ablation_mode", "threads"}. Missing keys keep
/// their defaults; unknown keys are a config error.
RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Command-line overrides; unset fields leave the config alone.
struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> beam;
    std::optional<std::string> task_scheme;
    bool no_negation = false;
    bool joint_review = false;
    std::optional<std::string> ablate;
    std::optional<std::size_t> threads;
};

void apply_overrides(RunConfig& config, const RunOverrides& overrides);

/// Feature configuration with the --ablate mask applied.
FeatureConfig effective_features(const RunConfig& config);

/// Hyperparameter ranges. Throws `ErrorKind::config`.
void validate(const RunConfig& config);

/// JSON form of a run configuration (paths as given).
std::string run_config_json(const RunConfig& config);

}  // namespace eqa
