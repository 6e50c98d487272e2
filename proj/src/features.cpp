#include "eqa/features.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "eqa/error.hpp"

namespace eqa {

namespace {

using AlignmentFeatures = std::array<double, FeatureLayout::alignment_size>;

std::string edge_label(const DependencyForest& f, const DependencyEdge& e)
{
    std::string key = f.nodes[e.head];
    key += '\x1f';
    key += e.relation;
    key += '\x1f';
    key += f.nodes[e.dependent];
    return key;
}

std::unordered_map<std::string, std::size_t> chain_labels(const DependencyForest& f)
{
    std::unordered_map<std::string, std::size_t> out;
    for (const auto& upper : f.edges) {
        for (const auto& lower : f.edges) {
            if (upper.dependent != lower.head) {
                continue;
            }
            auto key = edge_label(f, upper);
            key += '\x1e';
            key += lower.relation;
            key += '\x1f';
            key += f.nodes[lower.dependent];
            ++out[key];
        }
    }
    return out;
}

std::unordered_set<std::string> surface_set(std::span<const Unit> units)
{
    std::unordered_set<std::string> out;
    for (const auto& u : units) {
        out.insert(u.surface);
    }
    return out;
}

double coverage(const NgramSet& probe, const NgramSet& pool)
{
    if (probe.empty()) {
        return 0.0;
    }
    std::size_t hit = 0;
    for (const auto& g : probe) {
        hit += pool.contains(g) ? 1 : 0;
    }
    return static_cast<double>(hit) / static_cast<double>(probe.size());
}

// Everything about the snippet that the six match features read.
struct SnippetSummary {
    NgramSet bigrams;
    NgramSet trigrams;
    DependencyForest forest;
    double self_kernel = 0.0;
    struct Frame {
        std::string predicate;
        std::vector<std::string> argument;
    };
    std::vector<Frame> frames;
};

SnippetSummary summarize(std::span<const Sentence* const> sentences, double decay)
{
    SnippetSummary s;
    for (const auto* sent : sentences) {
        for (auto& g : ngrams(sent->units, 2)) {
            s.bigrams.insert(std::move(g));
        }
        for (auto& g : ngrams(sent->units, 3)) {
            s.trigrams.insert(std::move(g));
        }
        const auto base = s.forest.nodes.size();
        for (const auto& u : sent->units) {
            s.forest.nodes.push_back(u.surface);
        }
        for (const auto& e : sent->dependency_edges) {
            s.forest.edges.push_back(DependencyEdge{e.head + base, e.dependent + base, e.relation});
        }
        for (const auto& f : sent->srl_frames) {
            SnippetSummary::Frame frame{sent->units[f.predicate].surface, {}};
            for (auto i = f.argument.begin; i < f.argument.end; ++i) {
                frame.argument.push_back(sent->units[i].surface);
            }
            s.frames.push_back(std::move(frame));
        }
    }
    s.self_kernel = tree_kernel(s.forest, s.forest, decay);
    return s;
}

std::array<double, FeatureLayout::snippet_base> match_features(std::span<const Unit> probe,
                                                               const SnippetSummary& snippet,
                                                               double decay)
{
    std::array<double, FeatureLayout::snippet_base> f{};
    const auto words = surface_set(probe);
    f[0] = coverage(ngrams(probe, 2), snippet.bigrams);
    f[1] = coverage(ngrams(probe, 3), snippet.trigrams);

    DependencyForest projected{snippet.forest.nodes, {}};
    for (const auto& e : snippet.forest.edges) {
        if (words.contains(snippet.forest.nodes[e.head]) && words.contains(snippet.forest.nodes[e.dependent])) {
            projected.edges.push_back(e);
        }
    }
    if (!snippet.forest.edges.empty()) {
        f[2] = static_cast<double>(projected.edges.size()) / static_cast<double>(snippet.forest.edges.size());
    }

    if (!snippet.frames.empty()) {
        std::size_t role = 0;
        std::size_t pred_arg = 0;
        for (const auto& frame : snippet.frames) {
            bool all = true;
            bool any = false;
            for (const auto& a : frame.argument) {
                bool in = words.contains(a);
                all = all && in;
                any = any || in;
            }
            role += all ? 1 : 0;
            pred_arg += (any && words.contains(frame.predicate)) ? 1 : 0;
        }
        const auto n = static_cast<double>(snippet.frames.size());
        f[3] = static_cast<double>(role) / n;
        f[4] = static_cast<double>(pred_arg) / n;
    }

    if (!projected.edges.empty() && snippet.self_kernel > 0.0) {
        const auto cross = tree_kernel(snippet.forest, projected, decay);
        const auto self = tree_kernel(projected, projected, decay);
        f[5] = self > 0.0 ? cross / std::sqrt(snippet.self_kernel * self) : 0.0;
    }
    return f;
}

AlignmentFeatures unit_alignment_features(const Unit& unit,
                                          std::span<const double> unit_vec,
                                          const Unit* target,
                                          std::span<const double> target_vec,
                                          bool knowledge,
                                          const Resources& resources)
{
    AlignmentFeatures f{};
    if (target == nullptr) {
        f[7] = 1.0;
        return f;
    }
    f[0] = edit_similarity(unit.surface, target->surface);
    f[1] = cosine(unit_vec, target_vec);
    const auto rel = resources.relations().relations(unit.surface, target->surface);
    f[2] = (rel & LexicalRelation::antonymy) != 0 ? 1.0 : 0.0;
    f[3] = (rel & LexicalRelation::class_inclusion) != 0 ? 1.0 : 0.0;
    f[4] = (rel & LexicalRelation::is_a) != 0 ? 1.0 : 0.0;
    f[5] = knowledge ? 1.0 : 0.0;
    f[6] = 1.0;
    return f;
}

double block_dot(const AlignmentFeatures& f, std::span<const double> w)
{
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        s += w[i] * f[i];
    }
    return s;
}

const Unit& target_unit(const AlignmentTarget& t,
                        std::span<const Sentence* const> sentences,
                        std::span<const std::size_t> bits,
                        const KnowledgeStore& store)
{
    if (t.kind == AlignmentTarget::Kind::snippet) {
        return sentences[t.group]->units[t.unit];
    }
    return store.units_of(bits[t.group])[t.unit];
}

}  // namespace

std::string_view block_name(Block block) noexcept
{
    switch (block) {
    case Block::textbook: return "z1";
    case Block::chapter: return "z2";
    case Block::section: return "z3";
    case Block::snippet: return "z4";
    case Block::alignment: return "z5";
    }
    return "z1";
}

std::optional<Block> parse_block(std::string_view name) noexcept
{
    for (auto b : all_blocks) {
        if (block_name(b) == name) {
            return b;
        }
    }
    return std::nullopt;
}

std::size_t FeatureLayout::offset(Block block) const noexcept
{
    switch (block) {
    case Block::textbook: return 0;
    case Block::chapter: return retrieval_size;
    case Block::section: return 2 * retrieval_size;
    case Block::snippet: return 3 * retrieval_size;
    case Block::alignment: return 3 * retrieval_size + 2 * snippet_base + rst_cells;
    }
    return 0;
}

std::size_t FeatureLayout::size(Block block) const noexcept
{
    switch (block) {
    case Block::textbook:
    case Block::chapter:
    case Block::section: return retrieval_size;
    case Block::snippet: return 2 * snippet_base + rst_cells;
    case Block::alignment: return alignment_size;
    }
    return 0;
}

void validate(const FeatureConfig& config)
{
    if (config.rst_cells == 0) {
        fail(ErrorKind::config, "rst_cells must be positive");
    }
    if (config.snippet_max == 0) {
        fail(ErrorKind::config, "snippet_max must be at least 1");
    }
    if (!(config.tree_decay > 0.0 && config.tree_decay <= 1.0)) {
        fail(ErrorKind::config, "tree kernel decay must lie in (0, 1]");
    }
    if (!(config.bm25.k1 > 0.0) || !(config.bm25.b >= 0.0 && config.bm25.b <= 1.0)) {
        fail(ErrorKind::config, "bm25 requires k1 > 0 and 0 <= b <= 1");
    }
}

Resources::Resources(Curriculum corpus,
                     KnowledgeStore knowledge,
                     EmbeddingTable embeddings,
                     LexicalRelationTable relations,
                     FeatureConfig config,
                     std::optional<IndexSet> indices)
    : config_(config)
{
    validate(config_);
    IndexSet built = indices ? std::move(*indices) : build_indices(corpus);
    std::unordered_map<std::string, Sentence> variants;
    for (const auto& tb : corpus.textbooks()) {
        for (const auto& ch : tb.chapters) {
            for (const auto& sec : ch.sections) {
                for (const auto& s : sec.sentences) {
                    if (!s.coref_links.empty()) {
                        variants.emplace(s.id, first_mention_substitute(s, corpus));
                    }
                }
            }
        }
    }
    data_ = std::make_shared<const Data>(Data{std::move(corpus), std::move(built), std::move(knowledge),
                                              std::move(embeddings), std::move(relations), std::move(variants)});
}

Resources Resources::with_config(FeatureConfig config) const
{
    validate(config);
    Resources copy = *this;
    copy.config_ = config;
    return copy;
}

const Sentence& Resources::sentence(SectionRef section, std::size_t index, bool variant) const
{
    const auto& s = data_->corpus.section(section).sentences.at(index);
    if (variant) {
        if (auto it = data_->variants.find(s.id); it != data_->variants.end()) {
            return it->second;
        }
    }
    return s;
}

bool Resources::has_variant(SectionRef section, std::size_t index) const
{
    return data_->variants.contains(data_->corpus.section(section).sentences.at(index).id);
}

MweLexicon Resources::mwe_lexicon() const
{
    MweLexicon lex;
    for (const auto& tb : data_->corpus.textbooks()) {
        for (const auto& ch : tb.chapters) {
            for (const auto& sec : ch.sections) {
                for (const auto& s : sec.sentences) {
                    lex.add_from(s.units);
                }
            }
        }
    }
    for (std::size_t i = 0; i < data_->knowledge.size(); ++i) {
        lex.add_from(data_->knowledge.units_of(i));
    }
    return lex;
}

double dot(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) {
        fail(ErrorKind::dimension,
             "dot product of length " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

std::size_t levenshtein(std::string_view a, std::string_view b)
{
    if (a.size() < b.size()) {
        std::swap(a, b);
    }
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) {
        row[j] = j;
    }
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

double edit_similarity(std::string_view a, std::string_view b)
{
    const auto longest = std::max(a.size(), b.size());
    if (longest == 0) {
        return 1.0;
    }
    return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

DependencyForest forest_of(const Sentence& sentence)
{
    DependencyForest f;
    for (const auto& u : sentence.units) {
        f.nodes.push_back(u.surface);
    }
    f.edges = sentence.dependency_edges;
    return f;
}

double tree_kernel(const DependencyForest& a, const DependencyForest& b, double decay)
{
    std::unordered_map<std::string, std::size_t> edges_a;
    for (const auto& e : a.edges) {
        ++edges_a[edge_label(a, e)];
    }
    double edge_matches = 0.0;
    for (const auto& e : b.edges) {
        if (auto it = edges_a.find(edge_label(b, e)); it != edges_a.end()) {
            edge_matches += static_cast<double>(it->second);
        }
    }
    double chain_matches = 0.0;
    if (edge_matches > 0.0) {
        auto chains_a = chain_labels(a);
        for (const auto& [label, count] : chain_labels(b)) {
            if (auto it = chains_a.find(label); it != chains_a.end()) {
                chain_matches += static_cast<double>(count * it->second);
            }
        }
    }
    return decay * edge_matches + decay * decay * chain_matches;
}

std::vector<TargetUnit> alignment_targets(std::span<const Sentence* const> snippet,
                                          std::span<const std::size_t> knowledge_bits,
                                          const KnowledgeStore& store)
{
    std::vector<TargetUnit> out;
    for (std::size_t s = 0; s < snippet.size(); ++s) {
        for (std::size_t u = 0; u < snippet[s]->units.size(); ++u) {
            out.push_back({AlignmentTarget{AlignmentTarget::Kind::snippet, s, u}, &snippet[s]->units[u]});
        }
    }
    for (std::size_t k = 0; k < knowledge_bits.size(); ++k) {
        const auto& units = store.units_of(knowledge_bits[k]);
        for (std::size_t u = 0; u < units.size(); ++u) {
            out.push_back({AlignmentTarget{AlignmentTarget::Kind::knowledge, k, u}, &units[u]});
        }
    }
    return out;
}

std::array<double, FeatureLayout::alignment_size> alignment_features(const Unit& unit,
                                                                     const Unit* target,
                                                                     bool knowledge,
                                                                     const Resources& resources)
{
    const auto uv = unit_vector(unit, resources.embeddings());
    if (target == nullptr) {
        return unit_alignment_features(unit, uv, nullptr, {}, knowledge, resources);
    }
    const auto tv = unit_vector(*target, resources.embeddings());
    return unit_alignment_features(unit, uv, target, tv, knowledge, resources);
}

std::vector<AlignmentTarget> best_alignment(std::span<const Unit> hypothesis,
                                            std::span<const TargetUnit> targets,
                                            std::span<const double> block_weights,
                                            const Resources& resources)
{
    if (block_weights.size() != FeatureLayout::alignment_size) {
        fail(ErrorKind::dimension, "alignment weights must have " + std::to_string(FeatureLayout::alignment_size)
                                       + " components");
    }
    std::vector<std::vector<double>> target_vecs;
    target_vecs.reserve(targets.size());
    for (const auto& t : targets) {
        target_vecs.push_back(unit_vector(*t.unit, resources.embeddings()));
    }

    std::vector<AlignmentTarget> alignment;
    alignment.reserve(hypothesis.size());
    for (const auto& unit : hypothesis) {
        const auto uv = unit_vector(unit, resources.embeddings());
        std::optional<double> best;
        AlignmentTarget choice{};
        for (std::size_t i = 0; i < targets.size(); ++i) {
            const bool knowledge = targets[i].ref.kind == AlignmentTarget::Kind::knowledge;
            auto f = unit_alignment_features(unit, uv, targets[i].unit, target_vecs[i], knowledge, resources);
            auto score = block_dot(f, block_weights);
            if (!best || score > *best) {
                best = score;
                choice = targets[i].ref;
            }
        }
        auto unaligned = block_dot(unit_alignment_features(unit, uv, nullptr, {}, false, resources), block_weights);
        if (!best || unaligned > *best) {
            choice = AlignmentTarget{};
        }
        alignment.push_back(choice);
    }
    return alignment;
}

std::vector<const Sentence*> snippet_sentences(const AnswerEntailingStructure& z, const Resources& resources)
{
    std::vector<const Sentence*> out;
    out.reserve(z.snippet.size());
    for (std::size_t i = 0; i < z.snippet.size(); ++i) {
        const bool variant = i < z.coref_variant.size() && z.coref_variant[i];
        out.push_back(&resources.sentence(z.section, z.snippet[i], variant));
    }
    return out;
}

std::vector<double> snippet_block(const Hypothesis& h,
                                  std::span<const Sentence* const> sentences,
                                  const Resources& resources)
{
    const auto layout = resources.layout();
    std::vector<double> out(layout.size(Block::snippet), 0.0);
    if (sentences.empty()) {
        return out;
    }
    const auto decay = resources.config().tree_decay;
    const auto summary = summarize(sentences, decay);
    const auto base = match_features(h.units, summary, decay);
    const auto q = match_features(h.question_units, summary, decay);
    const auto a = match_features(h.answer_units, summary, decay);
    for (std::size_t i = 0; i < FeatureLayout::snippet_base; ++i) {
        out[i] = base[i];
        out[FeatureLayout::snippet_base + i] = q[i] * a[i];
    }
    const auto qword = to_string(static_cast<QwordClass>(std::min(h.qword_task, qword_task_count - 1)));
    for (const auto* s : sentences) {
        if (s->rst) {
            out[2 * FeatureLayout::snippet_base + rst_cell(s->rst->relation, qword, layout.rst_cells)] += 1.0;
        }
    }
    return out;
}

std::array<double, FeatureLayout::retrieval_size> retrieval_block(const Hypothesis& h,
                                                                  SectionRef section,
                                                                  Granularity granularity,
                                                                  const Resources& resources)
{
    const auto& index = resources.indices().at(granularity);
    const auto doc = index.doc_for(section);
    return {tfidf_score(index, h.units, doc), bm25_score(index, h.units, doc, resources.config().bm25),
            ngram_jaccard(ngrams(h.units, 2), index.bigrams[doc]),
            ngram_jaccard(ngrams(h.units, 3), index.trigrams[doc])};
}

void validate_structure(const Hypothesis& h, const AnswerEntailingStructure& z, const Resources& resources)
{
    const auto& tbs = resources.corpus().textbooks();
    const auto bad = [](const std::string& what) { fail(ErrorKind::invalid_argument, "invalid structure: " + what); };
    if (z.section.textbook >= tbs.size() || z.section.chapter >= tbs[z.section.textbook].chapters.size()
        || z.section.section >= tbs[z.section.textbook].chapters[z.section.chapter].sections.size()) {
        bad("section does not resolve");
    }
    const auto& sec = resources.corpus().section(z.section);
    for (std::size_t i = 0; i < z.snippet.size(); ++i) {
        if (z.snippet[i] >= sec.sentences.size() || (i > 0 && z.snippet[i] <= z.snippet[i - 1])) {
            bad("snippet sentences must be distinct, ascending and inside the section");
        }
    }
    if (!z.coref_variant.empty() && z.coref_variant.size() != z.snippet.size()) {
        bad("coref flags do not match the snippet");
    }
    if (z.knowledge_bits.size() > resources.config().knowledge_k) {
        bad("more knowledge bits than K");
    }
    if (resources.config().mask.no_knowledge && !z.knowledge_bits.empty()) {
        bad("knowledge bits selected while knowledge is disabled");
    }
    for (auto b : z.knowledge_bits) {
        if (b >= resources.knowledge().size()) {
            bad("unknown knowledge bit");
        }
    }
    if (!z.alignment.empty() && z.alignment.size() != h.units.size()) {
        bad("alignment must cover every hypothesis unit");
    }
    const auto sentences = snippet_sentences(z, resources);
    for (const auto& t : z.alignment) {
        switch (t.kind) {
        case AlignmentTarget::Kind::snippet:
            if (t.group >= sentences.size() || t.unit >= sentences[t.group]->units.size()) {
                bad("alignment target outside the snippet");
            }
            break;
        case AlignmentTarget::Kind::knowledge:
            if (t.group >= z.knowledge_bits.size()
                || t.unit >= resources.knowledge().units_of(z.knowledge_bits[t.group]).size()) {
                bad("alignment target outside the selected knowledge");
            }
            break;
        case AlignmentTarget::Kind::unaligned: break;
        }
    }
}

FeatureVector feature_map(const Hypothesis& h, const AnswerEntailingStructure& z, const Resources& resources)
{
    validate_structure(h, z, resources);
    const auto layout = resources.layout();
    FeatureVector fv{std::vector<double>(layout.dim(), 0.0), layout};

    const std::array<std::pair<Block, Granularity>, 3> retrieval{
        {{Block::textbook, Granularity::textbook}, {Block::chapter, Granularity::chapter},
         {Block::section, Granularity::section}}};
    for (const auto& [block, granularity] : retrieval) {
        auto r = retrieval_block(h, z.section, granularity, resources);
        std::copy(r.begin(), r.end(), fv.values.begin() + static_cast<std::ptrdiff_t>(layout.offset(block)));
    }

    const auto sentences = snippet_sentences(z, resources);
    auto z4 = snippet_block(h, sentences, resources);
    std::copy(z4.begin(), z4.end(), fv.values.begin() + static_cast<std::ptrdiff_t>(layout.offset(Block::snippet)));

    if (!z.alignment.empty()) {
        AlignmentFeatures sum{};
        for (std::size_t i = 0; i < h.units.size(); ++i) {
            const auto& t = z.alignment[i];
            const Unit* target = nullptr;
            if (t.kind != AlignmentTarget::Kind::unaligned) {
                target = &target_unit(t, sentences, z.knowledge_bits, resources.knowledge());
            }
            auto f = alignment_features(h.units[i], target, t.kind == AlignmentTarget::Kind::knowledge, resources);
            for (std::size_t k = 0; k < sum.size(); ++k) {
                sum[k] += f[k];
            }
        }
        const auto n = static_cast<double>(h.units.size());
        const auto off = layout.offset(Block::alignment);
        for (std::size_t k = 0; k < sum.size(); ++k) {
            fv.values[off + k] = sum[k] / n;
        }
    }

    for (auto block : all_blocks) {
        if (resources.config().mask.zeroed[static_cast<std::size_t>(block)]) {
            std::fill_n(fv.values.begin() + static_cast<std::ptrdiff_t>(layout.offset(block)), layout.size(block), 0.0);
        }
    }
    return fv;
}

std::size_t rst_cell(std::string_view relation, std::string_view qword, std::size_t cells)
{
    std::string key(relation);
    key += '\x1f';
    key += qword;
    return static_cast<std::size_t>(fnv1a64(key) % cells);
}

}  // namespace eqa
