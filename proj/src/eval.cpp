#include "eqa/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "eqa/error.hpp"
#include "eqa/parallel.hpp"

namespace eqa {

namespace {

constexpr double beta_tolerance = 1e-10;

// Lentz's method for the continued fraction of I_x(a, b).
double beta_fraction(double a, double b, double x)
{
    constexpr double tiny = 1e-300;
    constexpr int max_terms = 10000;
    double c = 1.0;
    double d = 1.0 - (a + b) * x / (a + 1.0);
    d = 1.0 / (std::abs(d) < tiny ? tiny : d);
    double f = d;
    for (int m = 1; m <= max_terms; ++m) {
        const double mm = m;
        double num = mm * (b - mm) * x / ((a + 2 * mm - 1) * (a + 2 * mm));
        for (int half = 0; half < 2; ++half) {
            d = 1.0 + num * d;
            d = 1.0 / (std::abs(d) < tiny ? tiny : d);
            c = 1.0 + num / c;
            c = std::abs(c) < tiny ? tiny : c;
            const double delta = c * d;
            f *= delta;
            if (half == 1 && std::abs(delta - 1.0) < beta_tolerance) {
                return f;
            }
            num = -(a + mm) * (a + b + mm) * x / ((a + 2 * mm) * (a + 2 * mm + 1));
        }
    }
    return f;
}

}  // namespace

EvalReport evaluate(const Model& model,
                    std::span<const Question> questions,
                    const QuestionProcessor& processor,
                    const Resources& resources,
                    const PredictOptions& options)
{
    if (questions.empty()) {
        fail(ErrorKind::invalid_argument, "cannot evaluate an empty dataset");
    }
    for (const auto& q : questions) {
        if (!q.gold_index) {
            fail(ErrorKind::invalid_argument, "question \"" + q.id + "\" has no gold answer");
        }
    }
    const auto n = questions.size();
    std::vector<std::size_t> predicted(n);
    std::vector<std::string> tasks(n);
    PredictOptions inner = options;
    inner.threads = 1;
    parallel_for(n, options.threads, [&](std::size_t i) {
        const auto hyps = processor.generate_hypotheses(questions[i]);
        predicted[i] = predict(model, hyps, resources, inner).index;
        tasks[i] = task_name(model.scheme, task_of(hyps.front(), model.scheme));
    });

    EvalReport report;
    report.n = n;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const int ok = predicted[i] == *questions[i].gold_index ? 1 : 0;
        correct += static_cast<std::size_t>(ok);
        report.question_ids.push_back(questions[i].id);
        report.correct.push_back(ok);
        auto& tally = report.per_task[tasks[i]];
        ++tally.n;
        tally.correct += static_cast<std::size_t>(ok);
    }
    report.predicted = std::move(predicted);
    report.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    return report;
}

FeatureMask parse_ablation(std::span<const std::string> names)
{
    FeatureMask mask;
    for (const auto& name : names) {
        if (name == "K") {
            mask.no_knowledge = true;
        } else if (auto b = parse_block(name)) {
            mask.zeroed[static_cast<std::size_t>(*b)] = true;
        } else {
            fail(ErrorKind::invalid_argument, "unknown ablation block \"" + name + "\" (expected z1..z5 or K)");
        }
    }
    return mask;
}

std::string ablation_label(const FeatureMask& mask)
{
    std::string out;
    for (auto b : all_blocks) {
        if (mask.zeroed[static_cast<std::size_t>(b)]) {
            out += out.empty() ? "" : "+";
            out += block_name(b);
        }
    }
    if (mask.no_knowledge) {
        out += out.empty() ? "K" : "+K";
    }
    return out.empty() ? "full" : "-" + out;
}

std::vector<FeatureMask> one_by_one_ablations()
{
    std::vector<FeatureMask> out;
    for (auto b : all_blocks) {
        FeatureMask m;
        m.zeroed[static_cast<std::size_t>(b)] = true;
        out.push_back(m);
    }
    FeatureMask k;
    k.no_knowledge = true;
    out.push_back(k);
    return out;
}

std::string_view to_string(AblationMode mode) noexcept
{
    return mode == AblationMode::retrain ? "retrain" : "masked";
}

std::vector<EvalReport> ablate(const Model& base,
                               std::span<const FeatureMask> settings,
                               AblationMode mode,
                               std::span<const TrainingExample> train,
                               std::span<const Question> questions,
                               const QuestionProcessor& processor,
                               const Resources& resources,
                               const PredictOptions& options)
{
    std::vector<EvalReport> out;
    for (const auto& setting : settings) {
        FeatureConfig features = base.features;
        for (std::size_t b = 0; b < block_count; ++b) {
            features.mask.zeroed[b] = features.mask.zeroed[b] || setting.zeroed[b];
        }
        features.mask.no_knowledge = features.mask.no_knowledge || setting.no_knowledge;
        const auto masked_resources = resources.with_config(features);

        Model model = base;
        model.features = features;
        if (mode == AblationMode::retrain) {
            auto config = base.train;
            config.threads = options.threads;
            model = cccp_train(train, masked_resources, config).model;
        }
        auto report = evaluate(model, questions, processor, masked_resources, options);
        report.label = ablation_label(setting);
        report.mode = std::string(to_string(mode));
        out.push_back(std::move(report));
    }
    return out;
}

double incomplete_beta(double a, double b, double x)
{
    if (!(a > 0.0) || !(b > 0.0) || x < 0.0 || x > 1.0) {
        fail(ErrorKind::invalid_argument, "incomplete beta arguments out of range");
    }
    if (x == 0.0 || x == 1.0) {
        return x;
    }
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_tailed(double t, double df)
{
    if (!(df > 0.0)) {
        fail(ErrorKind::invalid_argument, "degrees of freedom must be positive");
    }
    if (std::isinf(t)) {
        return 0.0;
    }
    return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

TTestResult paired_ttest(std::span<const int> a, std::span<const int> b)
{
    if (a.size() != b.size()) {
        fail(ErrorKind::invalid_argument, "paired t-test needs vectors of equal length");
    }
    if (a.size() < 2) {
        fail(ErrorKind::invalid_argument, "paired t-test needs at least two pairs");
    }
    const auto n = static_cast<double>(a.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        mean += a[i] - b[i];
    }
    mean /= n;
    double ss = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double dev = (a[i] - b[i]) - mean;
        ss += dev * dev;
    }
    if (ss == 0.0) {
        if (mean == 0.0) {
            return {0.0, 1.0};
        }
        return {mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity(), 0.0};
    }
    const double sd = std::sqrt(ss / (n - 1.0));
    const double t = mean / (sd / std::sqrt(n));
    return {t, student_t_two_tailed(t, n - 1.0)};
}

std::string report_json(std::span<const EvalReport> reports)
{
    nlohmann::json list = nlohmann::json::array();
    for (const auto& r : reports) {
        nlohmann::json tasks = nlohmann::json::object();
        for (const auto& [name, tally] : r.per_task) {
            tasks[name] = {{"n", tally.n},
                           {"correct", tally.correct},
                           {"accuracy", static_cast<double>(tally.correct) / static_cast<double>(tally.n)}};
        }
        list.push_back({{"label", r.label},
                        {"mode", r.mode},
                        {"n", r.n},
                        {"accuracy", r.accuracy},
                        {"per_task", tasks},
                        {"question_ids", r.question_ids},
                        {"correct", r.correct},
                        {"predicted", r.predicted}});
    }
    return list.dump(2) + "\n";
}

std::string report_table(std::span<const EvalReport> reports)
{
    struct Row {
        std::string setting, mode, task, n, correct, accuracy;
    };
    std::vector<Row> rows{{"setting", "mode", "task", "n", "correct", "accuracy"}};
    for (const auto& r : reports) {
        std::size_t correct = 0;
        for (int c : r.correct) {
            correct += static_cast<std::size_t>(c);
        }
        rows.push_back({r.label, r.mode, "*", std::to_string(r.n), std::to_string(correct),
                        fmt::format("{:.4f}", r.accuracy)});
        for (const auto& [name, tally] : r.per_task) {
            rows.push_back({r.label, r.mode, name, std::to_string(tally.n), std::to_string(tally.correct),
                            fmt::format("{:.4f}", static_cast<double>(tally.correct) / static_cast<double>(tally.n))});
        }
    }
    std::array<std::size_t, 6> width{};
    for (const auto& row : rows) {
        const std::array<const std::string*, 6> cells{&row.setting, &row.mode, &row.task, &row.n, &row.correct, &row.accuracy};
        for (std::size_t c = 0; c < cells.size(); ++c) {
            width[c] = std::max(width[c], cells[c]->size());
        }
    }
    std::string out;
    for (const auto& row : rows) {
        out += fmt::format("{:<{}}  {:<{}}  {:<{}}  {:>{}}  {:>{}}  {:>{}}\n", row.setting, width[0], row.mode, width[1],
                           row.task, width[2], row.n, width[3], row.correct, width[4], row.accuracy, width[5]);
    }
    return out;
}

}  // namespace eqa
