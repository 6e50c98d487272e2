#include "eqa/run_config.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "eqa/corpus.hpp"
#include "eqa/error.hpp"
#include "json_util.hpp"

namespace eqa {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where)
{
    if (!j.is_object()) {
        fail(ErrorKind::config, where + " must be an object");
    }
    for (const auto& [key, value] : j.items()) {
        if (!allowed.contains(key)) {
            fail(ErrorKind::config, "unknown key \"" + key + "\" in " + where);
        }
    }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where)
{
    auto it = j.find(key);
    if (it == j.end()) {
        return;
    }
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        fail(ErrorKind::config, where + "." + key + " has the wrong type");
    }
}

std::vector<std::string> split_commas(std::string_view text)
{
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto comma = text.find(',', pos);
        if (comma == std::string_view::npos) {
            comma = text.size();
        }
        auto item = trim(text.substr(pos, comma - pos));
        if (!item.empty()) {
            out.emplace_back(item);
        }
        pos = comma + 1;
    }
    return out;
}

TaskScheme scheme_or_fail(std::string_view name)
{
    auto s = parse_task_scheme(name);
    if (!s) {
        fail(ErrorKind::config, "unknown task scheme \"" + std::string(name) + "\" (expected none, qword or qtype)");
    }
    return *s;
}

}  // namespace

RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir)
{
    json j;
    try {
        j = detail::parse_json(json_text, "run config");
    } catch (const Error& e) {
        fail(ErrorKind::config, e.what());
    }
    check_keys(j, {"paths", "hyper", "task_scheme", "negation", "joint_review", "ablate", "ablation_mode", "threads"},
               "config");
    RunConfig c;
    if (auto it = j.find("paths"); it != j.end()) {
        const auto& p = *it;
        check_keys(p, {"corpus", "annotations", "questions", "eval_questions", "knowledge", "embeddings", "relations",
                       "rules", "model", "index", "predictions", "report", "trace"},
                   "paths");
        auto path = [&](const char* key, std::filesystem::path& out) {
            std::string s;
            read(p, key, s, "paths");
            if (!s.empty()) {
                std::filesystem::path value(s);
                out = value.is_relative() && !base_dir.empty() ? base_dir / value : value;
            }
        };
        path("corpus", c.paths.corpus);
        path("annotations", c.paths.annotations);
        path("questions", c.paths.questions);
        path("eval_questions", c.paths.eval_questions);
        path("knowledge", c.paths.knowledge);
        path("embeddings", c.paths.embeddings);
        path("relations", c.paths.relations);
        path("rules", c.paths.rules);
        path("model", c.paths.model);
        path("index", c.paths.index);
        path("predictions", c.paths.predictions);
        path("report", c.paths.report);
        path("trace", c.paths.trace);
    }
    if (auto it = j.find("hyper"); it != j.end()) {
        const auto& h = *it;
        check_keys(h, {"C", "beam", "L", "K", "H4", "lambda", "rho", "outer_iters", "inner_epochs", "eta0", "seed",
                       "bm25_k1", "bm25_b"},
                   "hyper");
        read(h, "C", c.train.C, "hyper");
        read(h, "beam", c.train.beam, "hyper");
        read(h, "L", c.features.snippet_max, "hyper");
        read(h, "K", c.features.knowledge_k, "hyper");
        read(h, "H4", c.features.rst_cells, "hyper");
        read(h, "lambda", c.features.tree_decay, "hyper");
        read(h, "rho", c.train.rho, "hyper");
        read(h, "outer_iters", c.train.outer_iters, "hyper");
        read(h, "inner_epochs", c.train.inner_epochs, "hyper");
        read(h, "eta0", c.train.eta0, "hyper");
        read(h, "seed", c.train.seed, "hyper");
        read(h, "bm25_k1", c.features.bm25.k1, "hyper");
        read(h, "bm25_b", c.features.bm25.b, "hyper");
    }
    std::string scheme = "none";
    read(j, "task_scheme", scheme, "config");
    c.train.scheme = scheme_or_fail(scheme);
    read(j, "negation", c.train.negation, "config");
    read(j, "joint_review", c.train.joint_review, "config");
    read(j, "threads", c.train.threads, "config");
    read(j, "ablate", c.ablate, "config");
    std::string mode = "retrain";
    read(j, "ablation_mode", mode, "config");
    if (mode == "retrain") {
        c.ablation_mode = AblationMode::retrain;
    } else if (mode == "masked") {
        c.ablation_mode = AblationMode::masked;
    } else {
        fail(ErrorKind::config, "ablation_mode must be \"retrain\" or \"masked\"");
    }
    validate(c);
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path)
{
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        fail(ErrorKind::config, std::string("cannot read config: ") + e.what());
    }
    return parse_run_config(text, path.parent_path());
}

void apply_overrides(RunConfig& config, const RunOverrides& o)
{
    if (o.seed) {
        config.train.seed = *o.seed;
    }
    if (o.beam) {
        config.train.beam = *o.beam;
    }
    if (o.task_scheme) {
        config.train.scheme = scheme_or_fail(*o.task_scheme);
    }
    if (o.no_negation) {
        config.train.negation = false;
    }
    if (o.joint_review) {
        config.train.joint_review = true;
    }
    if (o.ablate) {
        config.ablate = split_commas(*o.ablate);
    }
    if (o.threads) {
        config.train.threads = *o.threads;
    }
    validate(config);
}

FeatureConfig effective_features(const RunConfig& config)
{
    FeatureConfig f = config.features;
    f.mask = parse_ablation(config.ablate);
    return f;
}

void validate(const RunConfig& config)
{
    try {
        validate(config.train);
        validate(effective_features(config));
    } catch (const Error& e) {
        fail(ErrorKind::config, e.what());
    }
}

std::string run_config_json(const RunConfig& c)
{
    const auto& p = c.paths;
    json paths{{"corpus", p.corpus.string()},       {"annotations", p.annotations.string()},
               {"questions", p.questions.string()}, {"eval_questions", p.eval_questions.string()},
               {"knowledge", p.knowledge.string()}, {"embeddings", p.embeddings.string()},
               {"relations", p.relations.string()}, {"rules", p.rules.string()},
               {"model", p.model.string()},         {"index", p.index.string()},
               {"predictions", p.predictions.string()}, {"report", p.report.string()},
               {"trace", p.trace.string()}};
    json hyper{{"C", c.train.C},
               {"beam", c.train.beam},
               {"L", c.features.snippet_max},
               {"K", c.features.knowledge_k},
               {"H4", c.features.rst_cells},
               {"lambda", c.features.tree_decay},
               {"rho", c.train.rho},
               {"outer_iters", c.train.outer_iters},
               {"inner_epochs", c.train.inner_epochs},
               {"eta0", c.train.eta0},
               {"seed", c.train.seed},
               {"bm25_k1", c.features.bm25.k1},
               {"bm25_b", c.features.bm25.b}};
    json j{{"paths", paths},
           {"hyper", hyper},
           {"task_scheme", to_string(c.train.scheme)},
           {"negation", c.train.negation},
           {"joint_review", c.train.joint_review},
           {"ablate", c.ablate},
           {"ablation_mode", to_string(c.ablation_mode)},
           {"threads", c.train.threads}};
    return j.dump(2) + "\n";
}

}  // namespace eqa
