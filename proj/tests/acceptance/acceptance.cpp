// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

#include "eqa/commands.hpp"
#include "eqa/error.hpp"
#include "eqa/eval.hpp"
#include "eqa/inference.hpp"
#include "eqa/learner.hpp"
#include "eqa/run_config.hpp"
#include "oracles.hpp"

using namespace eqa;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what)
    {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

RunConfig scratch_config(const std::filesystem::path& config, const std::string& name)
{
    auto c = load_run_config(config);
    auto dir = testing::scratch_dir(name);
    c.paths.model = dir / "model.bin";
    c.paths.index = dir / "index.json";
    c.paths.predictions = dir / "predictions.jsonl";
    c.paths.report = dir / "report.json";
    c.paths.trace = dir / "trace.json";
    return c;
}

Outcome beam_oracle()
{
    Outcome o;
    const auto start = Clock::now();
    std::mt19937_64 rng(1001);
    std::size_t corpora = 0;
    std::size_t attempts = 0;
    while (corpora < 25 && attempts < 500) {
        ++attempts;
        auto c = testing::random_curriculum(rng, {2, 2, 3, 4, true});
        Resources r(c, testing::random_knowledge(rng, 6), testing::random_embeddings(rng),
                    testing::random_relations(rng));
        const auto count = count_structures(c, r.config().snippet_max);
        if (count > 200) {
            continue;
        }
        ++corpora;
        for (int trial = 0; trial < 3; ++trial) {
            auto h = testing::random_hypothesis(rng);
            auto w = testing::random_weights(rng, r.layout().dim());
            InferenceOptions opt;
            opt.beam = count;
            auto best = best_structure(h, w, r, opt);
            auto all = testing::enumerate_structures(h, w, r);
            o.require(all.size() == count, "enumeration size differs from count_structures");
            double max = -1e300;
            for (const auto& s : all) {
                max = std::max(max, s.score);
            }
            o.require(best.score == max, "beam score differs from the exhaustive maximum");
            bool member = false;
            for (const auto& s : all) {
                if (s.score == max) {
                    member = member || s.structure == best.structure;
                }
            }
            o.require(member, "beam structure is not an exhaustive argmax");
        }
    }
    const double t = seconds_since(start);
    o.require(corpora >= 20, "fewer than 20 corpora generated");
    o.require(t < 10.0, "took " + std::to_string(t) + " s");
    if (o.ok) {
        o.detail = std::to_string(corpora) + " corpora, " + std::to_string(t).substr(0, 5) + " s";
    }
    return o;
}

Outcome alignment_oracle()
{
    Outcome o;
    std::mt19937_64 rng(1002);
    std::size_t instances = 0;
    for (std::size_t units = 1; units <= 4; ++units) {
        for (std::size_t n_targets = 0; n_targets <= 5; ++n_targets) {
            for (int trial = 0; trial < 40; ++trial) {
                Resources r(testing::random_curriculum(rng, {1, 1, 1, 1, false}), testing::random_knowledge(rng, 2),
                            testing::random_embeddings(rng), testing::random_relations(rng));
                auto h = testing::random_hypothesis(rng, units, units);
                h.units.resize(std::min(h.units.size(), units));
                Sentence s;
                s.id = "t";
                auto words = tokenize(testing::random_text(rng, 8, 8));
                s.units.assign(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(n_targets));
                std::vector<const Sentence*> snippet{&s};
                auto targets = alignment_targets(snippet, {}, r.knowledge());
                auto w = testing::random_weights(rng, FeatureLayout::alignment_size);
                auto greedy = best_alignment(h.units, targets, w, r);
                std::vector<std::size_t> choice;
                for (const auto& t : greedy) {
                    choice.push_back(t.kind == AlignmentTarget::Kind::unaligned ? targets.size() : t.unit);
                }
                auto brute = testing::brute_force_alignment(h.units, targets, w, r);
                o.require(testing::alignment_objective(h.units, targets, choice, w, r) == brute.best,
                          "greedy objective below the brute-force maximum");
                ++instances;
            }
        }
    }
    if (o.ok) {
        o.detail = std::to_string(instances) + " instances";
    }
    return o;
}

Outcome cccp_separable()
{
    Outcome o;
    const auto start = Clock::now();
    auto config = scratch_config(testing::data_dir() / "separable" / "config.json", "acceptance_separable");
    config.train.outer_iters = 3;
    auto ws = load_workspace(config, config.features);
    auto questions = load_questions(config.paths.questions);
    o.require(questions.size() == 30, "separable fixture does not hold 30 questions");
    auto data = prepare_examples(questions, ws.processor, config.train, &ws.resources.corpus());
    auto result = cccp_train(data, ws.resources, config.train);
    PredictOptions options;
    options.beam = config.train.beam;
    auto report = evaluate(result.model, questions, ws.processor, ws.resources, options);
    o.require(report.accuracy == 1.0, "training accuracy " + std::to_string(report.accuracy));
    const auto& trace = result.objective_trace;
    o.require(trace.size() == 3, "trace has " + std::to_string(trace.size()) + " rounds");
    for (std::size_t i = 1; i < trace.size(); ++i) {
        o.require(trace[i] <= trace[i - 1] + 1e-6, "objective rose in round " + std::to_string(i + 1));
    }
    const double t = seconds_since(start);
    o.require(t < 30.0, "took " + std::to_string(t) + " s");
    if (o.ok) {
        std::ostringstream s;
        s << "accuracy 1.0, trace";
        for (double v : trace) {
            s << ' ' << v;
        }
        s << ", " << std::to_string(t).substr(0, 5) << " s";
        o.detail = s.str();
    }
    return o;
}

Outcome gradient_check()
{
    Outcome o;
    auto toy = testing::load_toy();
    auto r = testing::toy_resources(toy);
    auto p = testing::processor_for(r, load_rules(testing::data_dir() / "rules" / "default_rules.json"));
    std::mt19937_64 rng(1004);
    auto w0 = testing::random_weights(rng, r.layout().dim());
    std::vector<FixedLatentExample> data;
    for (const auto& q : toy.questions) {
        auto hyps = p.generate_hypotheses(q);
        FixedLatentExample ex;
        for (std::size_t i = 0; i < hyps.size(); ++i) {
            auto psi = best_structure(hyps[i], w0, r).features.values;
            if (i == *q.gold_index) {
                ex.gold = psi;
            } else {
                ex.incorrect.push_back(psi);
            }
        }
        ex.negated = hyps.front().is_negated;
        data.push_back(std::move(ex));
    }
    const double C = 1.0;
    double worst = 0.0;
    for (int point = 0; point < 5; ++point) {
        auto w = testing::random_weights(rng, r.layout().dim());
        auto g = inner_subgradient(w, data, C);
        for (std::size_t k = 0; k < w.size(); ++k) {
            const double h = 1e-6;
            auto up = w;
            auto down = w;
            up[k] += h;
            down[k] -= h;
            const double fd = (inner_objective(up, data, C) - inner_objective(down, data, C)) / (2 * h);
            const double rel = std::abs(fd - g[k]) / std::max(1.0, std::abs(g[k]));
            worst = std::max(worst, rel);
        }
    }
    o.require(worst <= 1e-4, "worst relative error " + std::to_string(worst));
    if (o.ok) {
        std::ostringstream s;
        s << "worst relative error " << worst;
        o.detail = s.str();
    }
    return o;
}

Outcome negation_semantics()
{
    Outcome o;
    auto config = scratch_config(testing::data_dir() / "toy" / "config.json", "acceptance_negation");
    auto ws = load_workspace(config, config.features);
    auto questions = load_questions(config.paths.questions);
    std::mt19937_64 rng(1005);
    auto m = make_model(config.features, config.train);
    std::size_t fired = 0;
    for (int trial = 0; trial < 10; ++trial) {
        m.weights = testing::random_weights(rng, m.weights.size());
        for (const auto& q : questions) {
            auto hyps = ws.processor.generate_hypotheses(q);
            PredictOptions on;
            PredictOptions off;
            off.negation = false;
            auto with = predict(m, hyps, ws.resources, on);
            auto without = predict(m, hyps, ws.resources, off);
            const auto& s = with.scores;
            const auto argmin = static_cast<std::size_t>(std::min_element(s.begin(), s.end()) - s.begin());
            const auto argmax = static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
            o.require(without.index == argmax, "negation off did not take the argmax");
            if (detect_negation(q.text)) {
                ++fired;
                o.require(with.index == argmin, "negated question " + q.id + " did not take the argmin");
            } else {
                o.require(with.index == argmax, "question " + q.id + " did not take the argmax");
            }
        }
    }
    o.require(fired > 0, "no negated question in the fixture");
    if (o.ok) {
        o.detail = std::to_string(fired) + " negated predictions";
    }
    return o;
}

Outcome mtl_embedding()
{
    Outcome o;
    auto toy = testing::load_toy();
    auto r = testing::toy_resources(toy);
    std::mt19937_64 rng(1006);
    const auto d = r.layout().dim();
    for (int i = 0; i < 100; ++i) {
        auto w = testing::random_weights(rng, d);
        auto h = testing::random_hypothesis(rng);
        auto z = best_structure(h, testing::random_weights(rng, d), r).structure;
        auto psi = feature_map(h, z, r).values;
        auto embedded = w;
        embedded.resize(2 * d, 0.0);
        const double single = dot(w, psi);
        const double multi = dot(embedded, mtl_feature_map(psi, 0, 1, 1.0));
        o.require(single == multi, "scores differ at draw " + std::to_string(i));
        auto rnd = testing::random_weights(rng, d);
        o.require(dot(w, rnd) == dot(embedded, mtl_feature_map(rnd, 0, 1, 1.0)), "random input differs");
    }
    if (o.ok) {
        o.detail = "100 draws exact";
    }
    return o;
}

Outcome retrieval_math()
{
    Outcome o;
    std::mt19937_64 rng(1007);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        auto c = testing::random_curriculum(rng, {2, 2, 2, 3, false});
        for (auto g : {Granularity::textbook, Granularity::chapter, Granularity::section}) {
            auto idx = build_index(c, g);
            auto docs = testing::documents(c, g);
            auto h = testing::random_hypothesis(rng);
            std::vector<std::string> q;
            for (const auto& u : h.units) {
                q.push_back(u.surface);
            }
            for (std::size_t doc = 0; doc < docs.size(); ++doc) {
                worst = std::max(worst, std::abs(tfidf_score(idx, h.units, doc) - testing::oracle_tfidf(docs, q, doc)));
                worst = std::max(worst, std::abs(bm25_score(idx, h.units, doc) - testing::oracle_bm25(docs, q, doc)));
            }
        }
    }
    o.require(worst <= 1e-12, "oracle difference " + std::to_string(worst));
    for (int i = 0; i < 1000; ++i) {
        auto a = tokenize(testing::random_text(rng, 0, 7));
        auto b = tokenize(testing::random_text(rng, 0, 7));
        const std::size_t n = 2 + static_cast<std::size_t>(i % 2);
        const double ab = ngram_jaccard(a, b, n);
        o.require(ab == ngram_jaccard(b, a, n), "jaccard is not symmetric");
        o.require(ab >= 0.0 && ab <= 1.0, "jaccard out of [0, 1]");
        o.require(a.size() < n || ngram_jaccard(a, a, n) == 1.0, "jaccard(a, a) is not 1");
    }
    if (o.ok) {
        std::ostringstream s;
        s << "max oracle difference " << worst;
        o.detail = s.str();
    }
    return o;
}

Outcome protocol_constants()
{
    Outcome o;
    auto defaults = nlohmann::json::parse(run_config_json(RunConfig{}));
    o.require(defaults.at("hyper").at("beam") == 5, "default beam is not 5");
    o.require(defaults.at("hyper").at("K") == 5, "default K is not 5");

    auto config = scratch_config(testing::data_dir() / "toy" / "config.json", "acceptance_constants");
    std::ostringstream log;
    cmd_train(config, log);
    auto header = nlohmann::json::parse(model_header_json(load_model(config.paths.model)));
    o.require(header.at("config").at("beam") == 5, "model snapshot beam is not 5");
    o.require(header.at("config").at("K") == 5, "model snapshot K is not 5");

    std::ostringstream out;
    cmd_predict(config, out);
    std::istringstream lines(slurp(config.paths.predictions));
    std::size_t records = 0;
    for (std::string line; std::getline(lines, line);) {
        auto rec = nlohmann::json::parse(line);
        o.require(rec.at("structure").at("knowledge").size() <= 5, "prediction uses more than K bits");
        ++records;
    }
    o.require(records > 0, "no predictions written");

    std::mt19937_64 rng(1008);
    for (int i = 0; i < 200; ++i) {
        auto store = testing::random_knowledge(rng, 20);
        auto h = testing::random_hypothesis(rng, 4, 12);
        o.require(select_knowledge_bits(h.units, {}, store, 5).size() <= 5, "selection exceeds K");
    }
    if (o.ok) {
        o.detail = "beam 5 and K 5 in snapshots, " + std::to_string(records) + " predictions within K";
    }
    return o;
}

Outcome determinism()
{
    Outcome o;
    std::array<RunConfig, 2> runs{scratch_config(testing::data_dir() / "toy" / "config.json", "acceptance_det_a"),
                                  scratch_config(testing::data_dir() / "toy" / "config.json", "acceptance_det_b")};
    runs[1].train.threads = 3;
    for (auto& c : runs) {
        std::ostringstream sink;
        cmd_train(c, sink);
        cmd_predict(c, sink);
    }
    const auto model_a = slurp(runs[0].paths.model);
    const auto model_b = slurp(runs[1].paths.model);
    const auto pred_a = slurp(runs[0].paths.predictions);
    const auto pred_b = slurp(runs[1].paths.predictions);
    o.require(!model_a.empty() && !pred_a.empty(), "outputs missing");
    o.require(model_a == model_b, "model files differ");
    o.require(pred_a == pred_b, "prediction files differ");
    if (o.ok) {
        o.detail = std::to_string(model_a.size()) + " model bytes, " + std::to_string(pred_a.size())
                   + " prediction bytes identical";
    }
    return o;
}

Outcome ablation_integrity()
{
    Outcome o;
    auto toy = testing::load_toy();
    auto r = testing::toy_resources(toy);
    auto p = testing::processor_for(r, load_rules(testing::data_dir() / "rules" / "default_rules.json"));
    std::mt19937_64 rng(1010);
    for (const auto& q : toy.questions) {
        for (const auto& h : p.generate_hypotheses(q)) {
            auto w = testing::random_weights(rng, r.layout().dim());
            auto z = best_structure(h, w, r).structure;
            auto full = feature_map(h, z, r);
            for (const auto& setting : one_by_one_ablations()) {
                auto config = r.config();
                config.mask = setting;
                auto masked_r = r.with_config(config);
                if (setting.no_knowledge) {
                    auto a = complete_structure(h, z.section, z.snippet, w, r);
                    auto b = complete_structure(h, z.section, z.snippet, w, masked_r);
                    o.require(b.structure.knowledge_bits.empty(), "knowledge selected under -K");
                    for (auto block : {Block::textbook, Block::chapter, Block::section, Block::snippet}) {
                        auto x = a.features.block(block);
                        auto y = b.features.block(block);
                        o.require(std::equal(x.begin(), x.end(), y.begin(), y.end()),
                                  "-K changed block " + std::string(block_name(block)));
                    }
                    continue;
                }
                auto masked = feature_map(h, z, masked_r);
                for (auto block : all_blocks) {
                    auto x = full.block(block);
                    auto y = masked.block(block);
                    if (setting.zeroed[static_cast<std::size_t>(block)]) {
                        o.require(std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; }),
                                  "masked block " + std::string(block_name(block)) + " is not zero");
                    } else {
                        o.require(std::equal(x.begin(), x.end(), y.begin(), y.end()),
                                  ablation_label(setting) + " changed block " + std::string(block_name(block)));
                    }
                }
            }
        }
    }

    auto config = scratch_config(testing::data_dir() / "toy" / "config.json", "acceptance_ablate");
    std::ostringstream out;
    auto reports = cmd_ablate(config, out);
    o.require(reports.size() == 7, "expected full plus six settings");
    std::vector<std::string> expected{"full", "-z1", "-z2", "-z3", "-z4", "-z5", "-K"};
    for (std::size_t i = 0; i < reports.size() && i < expected.size(); ++i) {
        const auto& rep = reports[i];
        o.require(rep.label == expected[i], "setting " + std::to_string(i) + " labelled " + rep.label);
        o.require(rep.n > 0, "empty report");
        o.require(rep.correct.size() == rep.n && rep.predicted.size() == rep.n, "report vectors malformed");
        o.require(rep.accuracy >= 0.0 && rep.accuracy <= 1.0, "accuracy out of range");
        std::size_t tally = 0;
        for (const auto& [task, t] : rep.per_task) {
            tally += t.n;
        }
        o.require(tally == rep.n, "per-task counts do not add up");
    }
    auto json = nlohmann::json::parse(slurp(config.paths.report));
    o.require(json.is_array() && json.size() == 7, "report file malformed");
    if (o.ok) {
        std::ostringstream s;
        for (const auto& rep : reports) {
            s << rep.label << '=' << rep.accuracy << ' ';
        }
        o.detail = s.str();
    }
    return o;
}

}  // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"beam search equals exhaustive argmax", beam_oracle},
        {"greedy alignment equals brute force", alignment_oracle},
        {"CCCP separates the separable fixture with a non-increasing objective", cccp_separable},
        {"inner subgradient matches finite differences", gradient_check},
        {"negated questions take the argmin", negation_semantics},
        {"single-task scores equal the T=1 multi-task embedding", mtl_embedding},
        {"retrieval scores match the scalar oracle", retrieval_math},
        {"beam 5 and K 5 in config snapshots", protocol_constants},
        {"equal seeds give byte-identical outputs", determinism},
        {"ablation touches only its block", ablation_integrity},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.ok = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failures += o.ok ? 0 : 1;
        std::cout << (o.ok ? "PASS" : "FAIL") << " criterion " << (i + 1) << ": " << criteria[i].first << " ("
                  << o.detail << ")" << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
