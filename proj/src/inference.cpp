#include "eqa/inference.hpp"

#include <algorithm>
#include <unordered_set>

#include "eqa/error.hpp"

namespace eqa {

namespace {

bool masked(const Resources& r, Block b)
{
    return r.config().mask.zeroed[static_cast<std::size_t>(b)];
}

std::span<const double> block_weights(std::span<const double> w, const FeatureLayout& layout, Block b)
{
    return w.subspan(layout.offset(b), layout.size(b));
}

double retrieval_score(const Hypothesis& h,
                       SectionRef ref,
                       Block block,
                       Granularity g,
                       std::span<const double> w,
                       const Resources& r)
{
    if (masked(r, block)) {
        return 0.0;
    }
    auto f = retrieval_block(h, ref, g, r);
    return dot(f, block_weights(w, r.layout(), block));
}

struct Partial {
    SectionRef ref;
    std::vector<std::size_t> snippet;
    double score = 0.0;
    /// Textbook + chapter + section part of `score`.
    double hierarchy = 0.0;
};

// Nested beam step; see best_structure.
template <typename Expand>
std::vector<Partial> select_nested(const std::vector<Partial>& prior, std::size_t beam, Expand expand)
{
    std::vector<Partial> pool;
    std::vector<bool> taken;
    std::vector<Partial> chosen;
    for (std::size_t b = 0; b < beam; ++b) {
        if (b < prior.size()) {
            for (auto& c : expand(prior[b])) {
                pool.push_back(std::move(c));
                taken.push_back(false);
            }
        }
        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (!taken[i] && (!best || pool[i].score > pool[*best].score)) {
                best = i;
            }
        }
        if (!best) {
            break;
        }
        taken[*best] = true;
        chosen.push_back(pool[*best]);
    }
    return chosen;
}

}  // namespace

SnippetChoice choose_coref(const Hypothesis& h,
                           SectionRef section,
                           std::span<const std::size_t> snippet,
                           std::span<const double> weights,
                           const Resources& resources)
{
    const auto layout = resources.layout();
    const auto w4 = block_weights(weights, layout, Block::snippet);
    const bool zeroed = masked(resources, Block::snippet);

    SnippetChoice choice;
    choice.coref_variant.assign(snippet.size(), false);
    std::vector<const Sentence*> sentences;
    for (auto idx : snippet) {
        sentences.push_back(&resources.sentence(section, idx, false));
    }
    choice.block = snippet_block(h, sentences, resources);
    choice.score = zeroed ? 0.0 : dot(choice.block, w4);
    if (zeroed) {
        std::fill(choice.block.begin(), choice.block.end(), 0.0);
        return choice;
    }
    for (std::size_t i = 0; i < snippet.size(); ++i) {
        if (!resources.has_variant(section, snippet[i])) {
            continue;
        }
        auto trial = sentences;
        trial[i] = &resources.sentence(section, snippet[i], true);
        auto block = snippet_block(h, trial, resources);
        auto score = dot(block, w4);
        if (score > choice.score) {
            sentences = std::move(trial);
            choice.block = std::move(block);
            choice.score = score;
            choice.coref_variant[i] = true;
        }
    }
    return choice;
}

ScoredStructure complete_structure(const Hypothesis& h,
                                   SectionRef section,
                                   std::vector<std::size_t> snippet,
                                   std::span<const double> weights,
                                   const Resources& resources)
{
    const auto layout = resources.layout();
    if (weights.size() != layout.dim()) {
        fail(ErrorKind::dimension, "weight vector has " + std::to_string(weights.size()) + " components; layout needs "
                                       + std::to_string(layout.dim()));
    }
    AnswerEntailingStructure z;
    z.section = section;
    z.coref_variant = choose_coref(h, section, snippet, weights, resources).coref_variant;
    z.snippet = std::move(snippet);

    const auto sentences = snippet_sentences(z, resources);
    if (!resources.config().mask.no_knowledge) {
        std::unordered_set<std::string> covered;
        for (const auto* s : sentences) {
            for (const auto& u : s->units) {
                covered.insert(u.surface);
            }
        }
        z.knowledge_bits = select_knowledge_bits(h.units, covered, resources.knowledge(), resources.config().knowledge_k);
    }
    const auto targets = alignment_targets(sentences, z.knowledge_bits, resources.knowledge());
    z.alignment = best_alignment(h.units, targets, block_weights(weights, layout, Block::alignment), resources);

    ScoredStructure out{std::move(z), {}, 0.0};
    out.features = feature_map(h, out.structure, resources);
    out.score = dot(weights, out.features.values);
    return out;
}

ScoredStructure best_structure(const Hypothesis& h,
                               std::span<const double> weights,
                               const Resources& resources,
                               const InferenceOptions& options)
{
    if (options.beam == 0) {
        fail(ErrorKind::invalid_argument, "beam width must be at least 1");
    }
    const auto layout = resources.layout();
    if (weights.size() != layout.dim()) {
        fail(ErrorKind::dimension, "weight vector has " + std::to_string(weights.size()) + " components; layout needs "
                                       + std::to_string(layout.dim()));
    }
    const auto& corpus = resources.corpus();
    const auto beam = options.beam;

    std::vector<Partial> sections;
    if (options.fixed_prefix) {
        const auto& p = *options.fixed_prefix;
        auto ref = corpus.resolve(p.textbook, p.chapter, p.section);
        if (!ref) {
            fail(ErrorKind::unknown_id, "fixed prefix " + p.textbook + "/" + p.chapter + "/" + p.section
                                            + " does not resolve");
        }
        double score = retrieval_score(h, *ref, Block::textbook, Granularity::textbook, weights, resources)
                       + retrieval_score(h, *ref, Block::chapter, Granularity::chapter, weights, resources)
                       + retrieval_score(h, *ref, Block::section, Granularity::section, weights, resources);
        sections.push_back(Partial{*ref, {}, score, score});
    } else {
        const std::vector<Partial> root{Partial{}};
        auto textbooks = select_nested(root, beam, [&](const Partial&) {
            std::vector<Partial> out;
            for (std::size_t t = 0; t < corpus.textbooks().size(); ++t) {
                SectionRef ref{t, 0, 0};
                out.push_back({ref, {}, retrieval_score(h, ref, Block::textbook, Granularity::textbook, weights, resources)});
            }
            return out;
        });
        auto chapters = select_nested(textbooks, beam, [&](const Partial& p) {
            std::vector<Partial> out;
            const auto& tb = corpus.textbooks()[p.ref.textbook];
            for (std::size_t c = 0; c < tb.chapters.size(); ++c) {
                SectionRef ref{p.ref.textbook, c, 0};
                out.push_back({ref, {},
                               p.score + retrieval_score(h, ref, Block::chapter, Granularity::chapter, weights, resources)});
            }
            return out;
        });
        sections = select_nested(chapters, beam, [&](const Partial& p) {
            std::vector<Partial> out;
            const auto& ch = corpus.textbooks()[p.ref.textbook].chapters[p.ref.chapter];
            for (std::size_t s = 0; s < ch.sections.size(); ++s) {
                SectionRef ref{p.ref.textbook, p.ref.chapter, s};
                out.push_back({ref, {},
                               p.score + retrieval_score(h, ref, Block::section, Granularity::section, weights, resources)});
            }
            return out;
        });
    }

    for (auto& p : sections) {
        p.hierarchy = p.score;
    }

    // Snippet stage: partial score = hierarchy score + snippet block score.
    auto extend = [&](const Partial& p, bool keep_stop) {
        std::vector<Partial> out;
        if (keep_stop) {
            out.push_back(p);
        }
        const auto n = corpus.section(p.ref).sentences.size();
        const std::size_t first = p.snippet.empty() ? 0 : p.snippet.back() + 1;
        for (std::size_t i = first; i < n; ++i) {
            Partial next{p.ref, p.snippet, 0.0, p.hierarchy};
            next.snippet.push_back(i);
            next.score = p.hierarchy + choose_coref(h, p.ref, next.snippet, weights, resources).score;
            out.push_back(std::move(next));
        }
        return out;
    };
    auto snippets = select_nested(sections, beam, [&](const Partial& p) { return extend(p, false); });
    for (std::size_t size = 2; size <= resources.config().snippet_max; ++size) {
        snippets = select_nested(snippets, beam, [&](const Partial& p) {
            return p.snippet.size() + 1 == size ? extend(p, true) : std::vector<Partial>{p};
        });
    }

    std::optional<ScoredStructure> best;
    for (const auto& p : snippets) {
        auto candidate = complete_structure(h, p.ref, p.snippet, weights, resources);
        if (!best || candidate.score > best->score) {
            best = std::move(candidate);
        }
    }
    return std::move(*best);
}

std::size_t count_structures(const Curriculum& curriculum, std::size_t snippet_max, std::optional<SectionRef> prefix)
{
    auto per_section = [&](const Section& sec) {
        const auto n = sec.sentences.size();
        std::size_t total = 0;
        // Sum of C(n, k) for k = 1..snippet_max.
        std::size_t binom = 1;
        for (std::size_t k = 1; k <= std::min(n, snippet_max); ++k) {
            binom = binom * (n - k + 1) / k;
            total += binom;
        }
        return total;
    };
    if (prefix) {
        return per_section(curriculum.section(*prefix));
    }
    std::size_t total = 0;
    for (auto ref : curriculum.sections()) {
        total += per_section(curriculum.section(ref));
    }
    return total;
}

}  // namespace eqa
