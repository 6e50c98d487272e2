#include "eqa/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "eqa/error.hpp"
#include "eqa/parallel.hpp"

namespace eqa {

namespace {

std::vector<double> effective(std::span<const double> w,
                              TaskScheme scheme,
                              std::size_t tasks,
                              double rho,
                              std::size_t d,
                              std::size_t task)
{
    if (scheme == TaskScheme::none) {
        return {w.begin(), w.end()};
    }
    if (task >= tasks) {
        fail(ErrorKind::invalid_argument, "task " + std::to_string(task) + " out of range");
    }
    std::vector<double> out(d);
    const auto block = w.subspan((task + 1) * d, d);
    for (std::size_t i = 0; i < d; ++i) {
        out[i] = rho * w[i] + block[i];
    }
    return out;
}

void axpy(double a, std::span<const double> x, std::span<double> y)
{
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] += a * x[i];
    }
}

}  // namespace

std::string_view to_string(TaskScheme scheme) noexcept
{
    switch (scheme) {
    case TaskScheme::none: return "none";
    case TaskScheme::qword: return "qword";
    case TaskScheme::qtype: return "qtype";
    }
    return "none";
}

std::optional<TaskScheme> parse_task_scheme(std::string_view name) noexcept
{
    for (auto s : {TaskScheme::none, TaskScheme::qword, TaskScheme::qtype}) {
        if (to_string(s) == name) {
            return s;
        }
    }
    return std::nullopt;
}

std::size_t task_count(TaskScheme scheme) noexcept
{
    switch (scheme) {
    case TaskScheme::none: return 1;
    case TaskScheme::qword: return qword_task_count;
    case TaskScheme::qtype: return qtype_task_count;
    }
    return 1;
}

std::size_t task_of(const Hypothesis& h, TaskScheme scheme) noexcept
{
    switch (scheme) {
    case TaskScheme::none: return 0;
    case TaskScheme::qword: return h.qword_task;
    case TaskScheme::qtype: return h.qtype_task;
    }
    return 0;
}

std::string task_name(TaskScheme scheme, std::size_t task)
{
    switch (scheme) {
    case TaskScheme::none: return "all";
    case TaskScheme::qword: return std::string(to_string(static_cast<QwordClass>(task)));
    case TaskScheme::qtype: return std::string(to_string(static_cast<QtypeClass>(task)));
    }
    return "all";
}

void validate(const TrainConfig& c)
{
    if (!(c.C > 0.0)) {
        fail(ErrorKind::config, "C must be positive");
    }
    if (c.outer_iters == 0 || c.inner_epochs == 0) {
        fail(ErrorKind::config, "outer_iters and inner_epochs must be positive");
    }
    if (!(c.eta0 > 0.0)) {
        fail(ErrorKind::config, "eta0 must be positive");
    }
    if (c.beam == 0) {
        fail(ErrorKind::config, "beam must be at least 1");
    }
    if (!(c.rho > 0.0)) {
        fail(ErrorKind::config, "rho must be positive");
    }
    if (c.threads == 0) {
        fail(ErrorKind::config, "threads must be at least 1");
    }
}

std::vector<double> Model::effective_weights(std::size_t task) const
{
    check_layout();
    return effective(weights, scheme, tasks, train.rho, feature_dim(), task);
}

std::vector<double> Model::augment(std::span<const double> psi, std::size_t task) const
{
    if (!multitask()) {
        return {psi.begin(), psi.end()};
    }
    return mtl_feature_map(psi, task, tasks, train.rho);
}

void Model::check_layout() const
{
    const auto d = feature_dim();
    const auto expected = multitask() ? d * (tasks + 1) : d;
    if (weights.size() != expected) {
        fail(ErrorKind::dimension, "model has " + std::to_string(weights.size()) + " weights; layout needs "
                                       + std::to_string(expected));
    }
    if (multitask() && tasks != task_count(scheme)) {
        fail(ErrorKind::dimension, "task count does not match the task scheme");
    }
}

Model make_model(const FeatureConfig& features, const TrainConfig& train)
{
    Model m;
    m.scheme = train.scheme;
    m.tasks = task_count(train.scheme);
    m.features = features;
    m.train = train;
    const auto d = features.layout().dim();
    m.weights.assign(m.multitask() ? d * (m.tasks + 1) : d, 0.0);
    return m;
}

std::vector<double> mtl_feature_map(std::span<const double> psi, std::size_t task, std::size_t tasks, double rho)
{
    if (task >= tasks) {
        fail(ErrorKind::invalid_argument,
             "task " + std::to_string(task) + " out of range for " + std::to_string(tasks) + " tasks");
    }
    const auto d = psi.size();
    std::vector<double> out(d * (tasks + 1), 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        out[i] = rho * psi[i];
        out[(task + 1) * d + i] = psi[i];
    }
    return out;
}

std::vector<TrainingExample> prepare_examples(std::span<const Question> questions,
                                              const QuestionProcessor& processor,
                                              const TrainConfig& config,
                                              const Curriculum* curriculum)
{
    std::vector<TrainingExample> out;
    for (const auto& q : questions) {
        validate_question(q, curriculum);
        if (!q.gold_index) {
            fail(ErrorKind::invalid_argument, "training question \"" + q.id + "\" has no gold answer");
        }
        if (q.review_anchor && !config.joint_review) {
            continue;
        }
        TrainingExample ex;
        ex.id = q.id;
        ex.hypotheses = processor.generate_hypotheses(q);
        ex.gold = *q.gold_index;
        ex.task = task_of(ex.hypotheses.front(), config.scheme);
        ex.negated = ex.hypotheses.front().is_negated;
        ex.anchor = q.review_anchor;
        out.push_back(std::move(ex));
    }
    return out;
}

double example_loss(std::span<const double> w, const FixedLatentExample& ex)
{
    if (ex.incorrect.empty()) {
        return 0.0;
    }
    const double gold = dot(w, ex.gold);
    double loss = 0.0;
    if (!ex.negated) {
        double worst = -std::numeric_limits<double>::infinity();
        for (const auto& phi : ex.incorrect) {
            worst = std::max(worst, dot(w, phi));
        }
        loss = worst + 1.0 - gold;
    } else {
        double lowest = std::numeric_limits<double>::infinity();
        for (const auto& phi : ex.incorrect) {
            lowest = std::min(lowest, dot(w, phi));
        }
        loss = gold + 1.0 - lowest;
    }
    return std::max(loss, 0.0);
}

std::vector<double> example_subgradient(std::span<const double> w, const FixedLatentExample& ex)
{
    std::vector<double> g(w.size(), 0.0);
    if (example_loss(w, ex) <= 0.0) {
        return g;
    }
    std::size_t pick = 0;
    double best = dot(w, ex.incorrect[0]);
    for (std::size_t j = 1; j < ex.incorrect.size(); ++j) {
        const double s = dot(w, ex.incorrect[j]);
        if (ex.negated ? s < best : s > best) {
            best = s;
            pick = j;
        }
    }
    const double sign = ex.negated ? -1.0 : 1.0;
    axpy(sign, ex.incorrect[pick], g);
    axpy(-sign, ex.gold, g);
    return g;
}

double inner_objective(std::span<const double> w, std::span<const FixedLatentExample> examples, double C)
{
    double loss = 0.0;
    for (const auto& ex : examples) {
        loss += example_loss(w, ex);
    }
    return 0.5 * dot(w, w) + C * loss;
}

std::vector<double> inner_subgradient(std::span<const double> w, std::span<const FixedLatentExample> examples, double C)
{
    std::vector<double> g(w.begin(), w.end());
    for (const auto& ex : examples) {
        axpy(C, example_subgradient(w, ex), g);
    }
    return g;
}

TrainResult cccp_train(std::span<const TrainingExample> data,
                       const Resources& resources,
                       const TrainConfig& config,
                       const Model* warm_start)
{
    validate(config);
    TrainResult result{make_model(resources.config(), config), {}};
    auto& model = result.model;
    if (warm_start != nullptr) {
        if (warm_start->weights.size() != model.weights.size()) {
            fail(ErrorKind::dimension, "preloaded model has " + std::to_string(warm_start->weights.size())
                                           + " weights; this configuration needs " + std::to_string(model.weights.size()));
        }
        model.weights = warm_start->weights;
    }
    for (const auto& ex : data) {
        if (ex.hypotheses.empty() || ex.gold >= ex.hypotheses.size()) {
            fail(ErrorKind::invalid_argument, "training example \"" + ex.id + "\" has no gold hypothesis");
        }
        if (ex.task >= model.tasks) {
            fail(ErrorKind::invalid_argument, "training example \"" + ex.id + "\" has an out-of-range task");
        }
    }

    const auto n = data.size();
    const auto d = model.feature_dim();
    auto& w = model.weights;
    std::size_t active = 0;
    for (const auto& ex : data) {
        active += ex.hypotheses.size() > 1 ? 1 : 0;
    }
    // Every minimizer satisfies ½||w||² <= objective(0) = C * active.
    const double radius = std::sqrt(2.0 * config.C * static_cast<double>(active));

    auto options_for = [&](const TrainingExample& ex) {
        InferenceOptions o;
        o.beam = config.beam;
        o.fixed_prefix = ex.anchor;
        return o;
    };
    auto infer = [&](const TrainingExample& ex, std::size_t hyp) {
        auto ew = effective(w, model.scheme, model.tasks, config.rho, d, ex.task);
        auto s = best_structure(ex.hypotheses[hyp], ew, resources, options_for(ex));
        return model.augment(s.features.values, ex.task);
    };

    std::vector<FixedLatentExample> fixed(n);
    std::vector<std::pair<std::size_t, std::size_t>> incorrect_slots;
    for (std::size_t i = 0; i < n; ++i) {
        fixed[i].negated = config.negation && data[i].negated;
        fixed[i].incorrect.resize(data[i].hypotheses.size() - 1);
        for (std::size_t j = 0; j < data[i].hypotheses.size(); ++j) {
            if (j != data[i].gold) {
                incorrect_slots.emplace_back(i, j);
            }
        }
    }
    auto refresh_incorrect = [&] {
        parallel_for(incorrect_slots.size(), config.threads, [&](std::size_t k) {
            auto [i, j] = incorrect_slots[k];
            fixed[i].incorrect[j < data[i].gold ? j : j - 1] = infer(data[i], j);
        });
    };

    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(n);
    for (std::size_t round = 0; round < config.outer_iters; ++round) {
        // Latent completion; an earlier completion is kept unless the new one
        // scores strictly higher, so the convex upper bound never loosens.
        parallel_for(n, config.threads, [&](std::size_t i) {
            auto phi = infer(data[i], data[i].gold);
            if (fixed[i].gold.empty() || dot(w, phi) > dot(w, fixed[i].gold)) {
                fixed[i].gold = std::move(phi);
            }
        });

        std::vector<double> best_w = w;
        double best_objective = std::numeric_limits<double>::infinity();
        for (std::size_t epoch = 0; epoch <= config.inner_epochs; ++epoch) {
            // Completions of the incorrect hypotheses are loss-augmented
            // inference; with 0-1 cost that is plain inference.
            refresh_incorrect();
            const double objective = inner_objective(w, fixed, config.C);
            if (objective < best_objective) {
                best_objective = objective;
                best_w = w;
            }
            if (epoch == config.inner_epochs || n == 0) {
                break;
            }
            const double eta = config.eta0 / (1.0 + static_cast<double>(epoch));
            for (std::size_t i = 0; i < n; ++i) {
                order[i] = i;
            }
            for (std::size_t i = n; i > 1; --i) {
                std::swap(order[i - 1], order[rng() % i]);
            }
            for (auto i : order) {
                auto g = example_subgradient(w, fixed[i]);
                for (std::size_t k = 0; k < w.size(); ++k) {
                    w[k] -= eta * (w[k] / static_cast<double>(n) + config.C * g[k]);
                }
                const double norm = std::sqrt(dot(w, w));
                if (norm > radius) {
                    const double scale = radius / norm;
                    for (auto& x : w) {
                        x *= scale;
                    }
                }
            }
        }
        w = std::move(best_w);
        result.objective_trace.push_back(best_objective);
    }
    return result;
}

std::size_t select_answer(std::span<const double> scores, bool negated)
{
    if (scores.empty()) {
        fail(ErrorKind::invalid_argument, "no candidate scores");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (negated ? scores[i] < scores[best] : scores[i] > scores[best]) {
            best = i;
        }
    }
    return best;
}

Prediction predict(const Model& model,
                   std::span<const Hypothesis> hypotheses,
                   const Resources& resources,
                   const PredictOptions& options)
{
    model.check_layout();
    if (resources.layout() != model.features.layout()) {
        fail(ErrorKind::dimension, "model feature layout does not match the configured features");
    }
    if (hypotheses.empty()) {
        fail(ErrorKind::invalid_argument, "nothing to predict: no hypotheses");
    }
    const auto task = task_of(hypotheses.front(), model.scheme);
    const auto w = model.effective_weights(task);

    Prediction p;
    p.scores.resize(hypotheses.size());
    p.structures.resize(hypotheses.size());
    InferenceOptions inference;
    inference.beam = options.beam;
    parallel_for(hypotheses.size(), options.threads, [&](std::size_t c) {
        auto s = best_structure(hypotheses[c], w, resources, inference);
        p.scores[c] = s.score;
        p.structures[c] = std::move(s.structure);
    });
    p.negated = options.negation && hypotheses.front().is_negated;
    p.index = select_answer(p.scores, p.negated);
    return p;
}

}  // namespace eqa
