#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eqa/features.hpp"
#include "eqa/inference.hpp"
#include "eqa/question.hpp"

namespace eqa {

enum class TaskScheme : std::uint8_t { none, qword, qtype };

std::string_view to_string(TaskScheme scheme) noexcept;
std::optional<TaskScheme> parse_task_scheme(std::string_view name) noexcept;

/// Number of tasks T under a scheme (1 for single-task).
std::size_t task_count(TaskScheme scheme) noexcept;
std::size_t task_of(const Hypothesis& h, TaskScheme scheme) noexcept;
std::string task_name(TaskScheme scheme, std::size_t task);

struct TrainConfig {
    double C = 1.0;
    std::size_t outer_iters = 10;
    std::size_t inner_epochs = 20;
    /// Step size at inner epoch e is eta0 / (1 + e).
    double eta0 = 0.1;
    std::size_t beam = 5;
    std::uint64_t seed = 0;
    TaskScheme scheme = TaskScheme::none;
    /// Scale of the shared block in the multi-task feature map.
    double rho = 1.0;
    bool negation = true;
    bool joint_review = false;
    std::size_t threads = 1;

    bool operator==(const TrainConfig&) const = default;
};

void validate(const TrainConfig& config);

inline constexpr std::string_view model_version = "v1";

struct Model {
    /// d values (single-task) or d * (T + 1): shared block, then one block
    /// per task.
    std::vector<double> weights;
    TaskScheme scheme = TaskScheme::none;
    std::size_t tasks = 1;
    FeatureConfig features;
    TrainConfig train;
    std::string version{model_version};

    [[nodiscard]] std::size_t feature_dim() const noexcept { return features.layout().dim(); }
    [[nodiscard]] bool multitask() const noexcept { return scheme != TaskScheme::none; }

    /// rho * shared + task block; the weights inference runs with.
    [[nodiscard]] std::vector<double> effective_weights(std::size_t task) const;

    /// Feature vector in weight space: ψ itself, or its multi-task embedding.
    [[nodiscard]] std::vector<double> augment(std::span<const double> psi, std::size_t task) const;

    /// Throws `ErrorKind::dimension` when the weight length does not fit the
    /// layout and task arrangement.
    void check_layout() const;
};

/// Zero-initialized model.
Model make_model(const FeatureConfig& features, const TrainConfig& train);

/// [rho * psi | 0 ... | psi at block `task` | ... 0].
std::vector<double> mtl_feature_map(std::span<const double> psi, std::size_t task, std::size_t tasks, double rho = 1.0);

struct TrainingExample {
    std::string id;
    std::vector<Hypothesis> hypotheses;
    std::size_t gold = 0;
    std::size_t task = 0;
    bool negated = false;
    std::optional<SectionAnchor> anchor;
};

/// Hypotheses, task and negation flag for every question. Review questions
/// (those with an anchor) are kept only when `config.joint_review` is set.
std::vector<TrainingExample> prepare_examples(std::span<const Question> questions,
                                              const QuestionProcessor& processor,
                                              const TrainConfig& config,
                                              const Curriculum* curriculum = nullptr);

/// One question with every latent structure fixed: weight-space feature
/// vectors of the gold hypothesis and of each incorrect one.
struct FixedLatentExample {
    std::vector<double> gold;
    std::vector<std::vector<double>> incorrect;
    bool negated = false;
};

/// Hinge with unit margin. Normally max_j (w.Φ_j + 1) - w.Φ*; for negated
/// questions the order flips to w.Φ* + 1 - min_j w.Φ_j. Clamped at 0, and 0
/// when there is no incorrect hypothesis.
double example_loss(std::span<const double> w, const FixedLatentExample& ex);

/// A subgradient of `example_loss` (ties: lowest hypothesis index).
std::vector<double> example_subgradient(std::span<const double> w, const FixedLatentExample& ex);

/// ½||w||² + C Σ loss.
double inner_objective(std::span<const double> w, std::span<const FixedLatentExample> examples, double C);
std::vector<double> inner_subgradient(std::span<const double> w, std::span<const FixedLatentExample> examples, double C);

struct TrainResult {
    Model model;
    /// Regularized objective after each outer round.
    std::vector<double> objective_trace;
};

/// CCCP: alternate latent completion of the gold hypotheses with a convex
/// step solved by projected stochastic subgradient.
TrainResult cccp_train(std::span<const TrainingExample> data,
                       const Resources& resources,
                       const TrainConfig& config,
                       const Model* warm_start = nullptr);

/// Argmax of `scores`, or argmin when `negated`; ties go to the lowest index.
std::size_t select_answer(std::span<const double> scores, bool negated);

struct Prediction {
    std::size_t index = 0;
    std::vector<double> scores;
    std::vector<AnswerEntailingStructure> structures;
    bool negated = false;
};

struct PredictOptions {
    std::size_t beam = 5;
    bool negation = true;
    std::size_t threads = 1;
};

Prediction predict(const Model& model,
                   std::span<const Hypothesis> hypotheses,
                   const Resources& resources,
                   const PredictOptions& options = {});

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

std::string encode_model(const Model& model);
Model decode_model(std::string_view bytes);

/// Config snapshot and layout descriptor stored in model files (JSON text).
std::string model_header_json(const Model& model);

}  // namespace eqa
