#include "eqa/commands.hpp"

#include <fstream>
#include <iostream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "eqa/corpus.hpp"
#include "eqa/eval.hpp"
#include "eqa/index.hpp"
#include "eqa/knowledge.hpp"
#include "eqa/parallel.hpp"

namespace eqa {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void require_path(const fs::path& path, const char* what)
{
    if (path.empty()) {
        fail(ErrorKind::config, fmt::format("no {} path configured", what));
    }
}

void require_existing(const fs::path& path, const char* what)
{
    require_path(path, what);
    if (!fs::exists(path)) {
        fail(ErrorKind::config, fmt::format("{} path \"{}\" does not exist", what, path.string()));
    }
}

void check_optional(const fs::path& path, const char* what)
{
    if (!path.empty() && !fs::exists(path)) {
        fail(ErrorKind::config, fmt::format("{} path \"{}\" does not exist", what, path.string()));
    }
}

void check_inputs(const RunConfig& c)
{
    require_existing(c.paths.corpus, "corpus");
    check_optional(c.paths.annotations, "annotations");
    check_optional(c.paths.knowledge, "knowledge");
    check_optional(c.paths.embeddings, "embeddings");
    check_optional(c.paths.relations, "relations");
    check_optional(c.paths.rules, "rules");
}

const fs::path& eval_questions_path(const RunConfig& c)
{
    return c.paths.eval_questions.empty() ? c.paths.questions : c.paths.eval_questions;
}

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorKind::io, "cannot write \"" + path.string() + "\"");
    }
    out << text;
}

std::vector<Question> questions_for(const fs::path& path, const Curriculum& corpus)
{
    auto questions = load_questions(path);
    for (const auto& q : questions) {
        validate_question(q, &corpus);
    }
    return questions;
}

Curriculum load_curriculum(const RunConfig& c)
{
    return load_corpus(c.paths.corpus, c.paths.annotations);
}

void write_reports(const RunConfig& c, std::span<const EvalReport> reports, std::ostream& out)
{
    const auto table = report_table(reports);
    if (!c.paths.report.empty()) {
        write_text(c.paths.report, report_json(reports));
        auto txt = c.paths.report;
        txt.replace_extension(".txt");
        write_text(txt, table);
    }
    out << table;
}

PredictOptions predict_options(const RunConfig& c)
{
    return PredictOptions{c.train.beam, c.train.negation, c.train.threads};
}

}  // namespace

int exit_code(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::config: return 2;
    case ErrorKind::parse:
    case ErrorKind::duplicate_id:
    case ErrorKind::empty_node:
    case ErrorKind::span:
    case ErrorKind::annotation: return 3;
    case ErrorKind::io: return 4;
    case ErrorKind::version:
    case ErrorKind::corrupt: return 5;
    case ErrorKind::dimension: return 6;
    case ErrorKind::unknown_id:
    case ErrorKind::invalid_argument: return 7;
    }
    return 1;
}

Workspace load_workspace(const RunConfig& c, const FeatureConfig& features)
{
    check_inputs(c);
    auto corpus = load_curriculum(c);
    std::optional<IndexSet> indices;
    if (!c.paths.index.empty()) {
        indices = load_index_cache(c.paths.index, content_hash(corpus));
    }
    KnowledgeStore knowledge = c.paths.knowledge.empty() ? KnowledgeStore{} : load_knowledge(c.paths.knowledge);
    EmbeddingTable embeddings = c.paths.embeddings.empty() ? EmbeddingTable{} : load_embeddings(c.paths.embeddings);
    LexicalRelationTable relations =
        c.paths.relations.empty() ? LexicalRelationTable{} : load_lexical_relations(c.paths.relations);
    Resources resources(std::move(corpus), std::move(knowledge), std::move(embeddings), std::move(relations),
                        features, std::move(indices));
    QuestionProcessor processor;
    if (!c.paths.rules.empty()) {
        processor.rules = load_rules(c.paths.rules);
    }
    processor.mwes = resources.mwe_lexicon();
    return Workspace{std::move(resources), std::move(processor)};
}

std::string prediction_json(const Question& question, const Prediction& p, const Resources& resources)
{
    const auto& corpus = resources.corpus();
    const auto& z = p.structures.at(p.index);
    const auto& tb = corpus.textbooks().at(z.section.textbook);
    const auto& ch = tb.chapters.at(z.section.chapter);
    const auto& sec = ch.sections.at(z.section.section);
    json snippet = json::array();
    for (std::size_t i = 0; i < z.snippet.size(); ++i) {
        snippet.push_back(sec.sentences.at(z.snippet[i]).id);
    }
    json coref = json::array();
    for (bool v : z.coref_variant) {
        coref.push_back(v);
    }
    json knowledge = json::array();
    for (auto k : z.knowledge_bits) {
        knowledge.push_back(resources.knowledge().at(k).id);
    }
    json record{{"id", question.id},
                {"predicted", p.index},
                {"negated", p.negated},
                {"scores", p.scores},
                {"structure",
                 {{"textbook", tb.id},
                  {"chapter", ch.id},
                  {"section", sec.id},
                  {"snippet", snippet},
                  {"coref_variant", coref},
                  {"knowledge", knowledge}}}};
    if (question.gold_index) {
        record["gold"] = *question.gold_index;
    }
    return record.dump();
}

void cmd_index(const RunConfig& c, std::ostream& log)
{
    check_inputs(c);
    require_path(c.paths.index, "index");
    const auto corpus = load_curriculum(c);
    const auto indices = build_indices(corpus);
    if (c.paths.index.has_parent_path()) {
        fs::create_directories(c.paths.index.parent_path());
    }
    save_index_cache(indices, content_hash(corpus), c.paths.index);
    log << fmt::format("indexed {} textbooks, {} chapters, {} sections -> {}\n", indices.textbook.n_docs(),
                       indices.chapter.n_docs(), indices.section.n_docs(), c.paths.index.string());
}

void cmd_train(const RunConfig& c, std::ostream& log)
{
    require_existing(c.paths.questions, "questions");
    require_path(c.paths.model, "model");
    auto ws = load_workspace(c, effective_features(c));
    const auto questions = questions_for(c.paths.questions, ws.resources.corpus());
    const auto examples = prepare_examples(questions, ws.processor, c.train, &ws.resources.corpus());
    auto result = cccp_train(examples, ws.resources, c.train);
    if (c.paths.model.has_parent_path()) {
        fs::create_directories(c.paths.model.parent_path());
    }
    save_model(result.model, c.paths.model);

    auto trace_path = c.paths.trace;
    if (trace_path.empty()) {
        trace_path = c.paths.model;
        trace_path += ".trace.json";
    }
    json trace{{"examples", examples.size()}, {"objective_trace", result.objective_trace}};
    write_text(trace_path, trace.dump(2) + "\n");
    for (std::size_t r = 0; r < result.objective_trace.size(); ++r) {
        log << fmt::format("round {:>3}  objective {:.6f}\n", r + 1, result.objective_trace[r]);
    }
    log << fmt::format("trained on {} questions -> {}\n", examples.size(), c.paths.model.string());
}

void cmd_predict(const RunConfig& c, std::ostream& out)
{
    require_existing(c.paths.model, "model");
    require_existing(eval_questions_path(c), "questions");
    const auto model = load_model(c.paths.model);
    auto features = model.features;
    for (std::size_t b = 0; b < block_count; ++b) {
        features.mask.zeroed[b] = features.mask.zeroed[b] || effective_features(c).mask.zeroed[b];
    }
    features.mask.no_knowledge = features.mask.no_knowledge || effective_features(c).mask.no_knowledge;
    auto ws = load_workspace(c, features);
    const auto questions = questions_for(eval_questions_path(c), ws.resources.corpus());

    std::vector<std::string> lines(questions.size());
    auto options = predict_options(c);
    options.threads = 1;
    parallel_for(questions.size(), c.train.threads, [&](std::size_t i) {
        const auto hyps = ws.processor.generate_hypotheses(questions[i]);
        lines[i] = prediction_json(questions[i], predict(model, hyps, ws.resources, options), ws.resources);
    });
    std::string text;
    for (const auto& l : lines) {
        text += l;
        text += '\n';
    }
    if (c.paths.predictions.empty()) {
        out << text;
    } else {
        write_text(c.paths.predictions, text);
        out << fmt::format("{} predictions -> {}\n", lines.size(), c.paths.predictions.string());
    }
}

EvalReport cmd_eval(const RunConfig& c, std::ostream& out)
{
    require_existing(c.paths.model, "model");
    require_existing(eval_questions_path(c), "questions");
    auto model = load_model(c.paths.model);
    const auto mask = effective_features(c).mask;
    for (std::size_t b = 0; b < block_count; ++b) {
        model.features.mask.zeroed[b] = model.features.mask.zeroed[b] || mask.zeroed[b];
    }
    model.features.mask.no_knowledge = model.features.mask.no_knowledge || mask.no_knowledge;
    auto ws = load_workspace(c, model.features);
    const auto questions = questions_for(eval_questions_path(c), ws.resources.corpus());
    auto report = evaluate(model, questions, ws.processor, ws.resources, predict_options(c));
    report.label = ablation_label(model.features.mask);
    write_reports(c, std::span<const EvalReport>(&report, 1), out);
    return report;
}

std::vector<EvalReport> cmd_ablate(const RunConfig& c, std::ostream& out)
{
    require_existing(eval_questions_path(c), "questions");
    std::vector<FeatureMask> settings{FeatureMask{}};
    if (c.ablate.empty()) {
        for (const auto& m : one_by_one_ablations()) {
            settings.push_back(m);
        }
    } else {
        for (const auto& name : c.ablate) {
            settings.push_back(parse_ablation(std::span<const std::string>(&name, 1)));
        }
    }

    Model base;
    std::vector<TrainingExample> examples;
    std::optional<Workspace> ws;
    if (c.ablation_mode == AblationMode::masked) {
        require_existing(c.paths.model, "model");
        base = load_model(c.paths.model);
        ws.emplace(load_workspace(c, base.features));
    } else {
        require_existing(c.paths.questions, "questions");
        base = make_model(c.features, c.train);
        ws.emplace(load_workspace(c, c.features));
        const auto train = questions_for(c.paths.questions, ws->resources.corpus());
        examples = prepare_examples(train, ws->processor, c.train, &ws->resources.corpus());
    }
    const auto questions = questions_for(eval_questions_path(c), ws->resources.corpus());
    auto reports = ablate(base, settings, c.ablation_mode, examples, questions, ws->processor, ws->resources,
                          predict_options(c));
    write_reports(c, reports, out);
    return reports;
}

}  // namespace eqa
