#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eqa/learner.hpp"

namespace eqa {

struct TaskTally {
    std::size_t n = 0;
    std::size_t correct = 0;

    bool operator==(const TaskTally&) const = default;
};

struct EvalReport {
    std::string label = "full";
    /// "direct", "retrain" or "masked".
    std::string mode = "direct";
    std::size_t n = 0;
    double accuracy = 0.0;
    std::map<std::string, TaskTally> per_task;
    std::vector<std::string> question_ids;
    std::vector<int> correct;
    std::vector<std::size_t> predicted;

    bool operator==(const EvalReport&) const = default;
};

/// Accuracy over `questions`, broken down by the model's task scheme.
/// Questions are scored in parallel.
EvalReport evaluate(const Model& model,
                    std::span<const Question> questions,
                    const QuestionProcessor& processor,
                    const Resources& resources,
                    const PredictOptions& options = {});

/// Blocks z1..z5 and "K" (knowledge selection).
FeatureMask parse_ablation(std::span<const std::string> names);
std::string ablation_label(const FeatureMask& mask);

/// The six one-at-a-time settings: z1, ..., z5, K.
std::vector<FeatureMask> one_by_one_ablations();

enum class AblationMode { retrain, masked };

std::string_view to_string(AblationMode mode) noexcept;

/// One report per setting, in order. Masks combine with the model's own mask.
/// `retrain` trains a fresh model per setting on `train` with the base
/// model's training configuration; `masked` re-evaluates the base weights
/// with the named features forced to zero.
std::vector<EvalReport> ablate(const Model& base,
                               std::span<const FeatureMask> settings,
                               AblationMode mode,
                               std::span<const TrainingExample> train,
                               std::span<const Question> questions,
                               const QuestionProcessor& processor,
                               const Resources& resources,
                               const PredictOptions& options = {});

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
};

/// Two-tailed paired t-test on per-question 0/1 correctness.
TTestResult paired_ttest(std::span<const int> a, std::span<const int> b);

/// Regularized incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);

/// Two-tailed p-value of a t statistic with `df` degrees of freedom.
double student_t_two_tailed(double t, double df);

std::string report_json(std::span<const EvalReport> reports);
std::string report_table(std::span<const EvalReport> reports);

}  // namespace eqa
