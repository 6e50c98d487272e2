#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "eqa/corpus.hpp"
#include "eqa/index.hpp"
#include "eqa/knowledge.hpp"
#include "eqa/question.hpp"

namespace eqa {

/// The five feature blocks, one per part of the answer-entailing structure.
enum class Block : std::uint8_t { textbook, chapter, section, snippet, alignment };

inline constexpr std::size_t block_count = 5;
inline constexpr std::array<Block, block_count> all_blocks{Block::textbook, Block::chapter, Block::section,
                                                           Block::snippet, Block::alignment};

/// "z1" .. "z5".
std::string_view block_name(Block block) noexcept;
std::optional<Block> parse_block(std::string_view name) noexcept;

struct FeatureLayout {
    static constexpr std::size_t retrieval_size = 4;
    static constexpr std::size_t snippet_base = 6;
    static constexpr std::size_t alignment_size = 8;

    /// Number of hashed RST x question-word cells.
    std::size_t rst_cells = 64;

    [[nodiscard]] std::size_t offset(Block block) const noexcept;
    [[nodiscard]] std::size_t size(Block block) const noexcept;
    [[nodiscard]] std::size_t dim() const noexcept { return 3 * retrieval_size + 2 * snippet_base + rst_cells + alignment_size; }

    bool operator==(const FeatureLayout&) const = default;
};

/// Blocks forced to zero, and whether knowledge selection is disabled.
struct FeatureMask {
    std::array<bool, block_count> zeroed{};
    bool no_knowledge = false;

    bool operator==(const FeatureMask&) const = default;
};

struct FeatureConfig {
    std::size_t rst_cells = 64;
    std::size_t snippet_max = 2;
    std::size_t knowledge_k = 5;
    double tree_decay = 0.5;
    Bm25Params bm25;
    FeatureMask mask;

    [[nodiscard]] FeatureLayout layout() const noexcept { return FeatureLayout{rst_cells}; }

    bool operator==(const FeatureConfig&) const = default;
};

void validate(const FeatureConfig& config);

/// Immutable bundle of everything feature extraction reads. Copies share the
/// underlying data, so `with_config` is cheap.
class Resources {
  public:
    Resources(Curriculum corpus,
              KnowledgeStore knowledge,
              EmbeddingTable embeddings,
              LexicalRelationTable relations,
              FeatureConfig config = {},
              std::optional<IndexSet> indices = std::nullopt);

    [[nodiscard]] const Curriculum& corpus() const noexcept { return data_->corpus; }
    [[nodiscard]] const IndexSet& indices() const noexcept { return data_->indices; }
    [[nodiscard]] const KnowledgeStore& knowledge() const noexcept { return data_->knowledge; }
    [[nodiscard]] const EmbeddingTable& embeddings() const noexcept { return data_->embeddings; }
    [[nodiscard]] const LexicalRelationTable& relations() const noexcept { return data_->relations; }
    [[nodiscard]] const FeatureConfig& config() const noexcept { return config_; }
    [[nodiscard]] FeatureLayout layout() const noexcept { return config_.layout(); }

    [[nodiscard]] Resources with_config(FeatureConfig config) const;

    /// Sentence `index` of `section`, or its first-mention variant.
    [[nodiscard]] const Sentence& sentence(SectionRef section, std::size_t index, bool variant) const;
    [[nodiscard]] bool has_variant(SectionRef section, std::size_t index) const;

    /// Surfaces of all MWE units in the corpus and knowledge store.
    [[nodiscard]] MweLexicon mwe_lexicon() const;

  private:
    struct Data {
        Curriculum corpus;
        IndexSet indices;
        KnowledgeStore knowledge;
        EmbeddingTable embeddings;
        LexicalRelationTable relations;
        std::unordered_map<std::string, Sentence> variants;
    };

    std::shared_ptr<const Data> data_;
    FeatureConfig config_;
};

struct AlignmentTarget {
    enum class Kind : std::uint8_t { snippet, knowledge, unaligned };

    Kind kind = Kind::unaligned;
    /// Snippet position or knowledge-selection position.
    std::size_t group = 0;
    /// Unit index within that sentence or knowledge bit.
    std::size_t unit = 0;

    bool operator==(const AlignmentTarget&) const = default;
};

/// The latent variable: a walk down the hierarchy, a snippet of sentences
/// from the chosen section, selected knowledge bits, and an alignment of
/// hypothesis units.
struct AnswerEntailingStructure {
    SectionRef section;
    /// Sentence indices within the section, strictly ascending.
    std::vector<std::size_t> snippet;
    /// Per snippet sentence: use its first-mention variant.
    std::vector<bool> coref_variant;
    /// Positions in the knowledge store.
    std::vector<std::size_t> knowledge_bits;
    /// Empty (no alignment) or one target per hypothesis unit.
    std::vector<AlignmentTarget> alignment;

    bool operator==(const AnswerEntailingStructure&) const = default;
};

struct FeatureVector {
    std::vector<double> values;
    FeatureLayout layout;

    [[nodiscard]] std::span<const double> block(Block b) const
    {
        return std::span<const double>(values).subspan(layout.offset(b), layout.size(b));
    }
};

double dot(std::span<const double> a, std::span<const double> b);

std::size_t levenshtein(std::string_view a, std::string_view b);

/// 1 - levenshtein(a, b) / max(|a|, |b|); 1 for two empty strings.
double edit_similarity(std::string_view a, std::string_view b);

/// Nodes are labelled by unit surface; edges by relation.
struct DependencyForest {
    std::vector<std::string> nodes;
    std::vector<DependencyEdge> edges;
};

DependencyForest forest_of(const Sentence& sentence);

/// Edge/chain fragment kernel: decay per pair of identically labelled edges
/// (head surface, relation, dependent surface), plus decay^2 per pair of
/// identically labelled two-edge head-to-dependent chains.
double tree_kernel(const DependencyForest& a, const DependencyForest& b, double decay = 0.5);

/// A unit an alignment may point at.
struct TargetUnit {
    AlignmentTarget ref;
    const Unit* unit = nullptr;
};

/// Snippet units first (in snippet order), then knowledge-bit units.
std::vector<TargetUnit> alignment_targets(std::span<const Sentence* const> snippet,
                                          std::span<const std::size_t> knowledge_bits,
                                          const KnowledgeStore& store);

/// Un-normalized z5 contribution of aligning `unit` to `target` (nullptr for
/// unaligned): [edit similarity, cosine, antonymy, class inclusion, is-a,
/// knowledge flag, aligned, unaligned].
std::array<double, FeatureLayout::alignment_size> alignment_features(const Unit& unit,
                                                                     const Unit* target,
                                                                     bool knowledge,
                                                                     const Resources& resources);

/// Per-unit argmax of the z5 contribution under `block_weights`. Candidates
/// are tried snippet units first, then knowledge units, then unaligned; a
/// later candidate wins only on a strictly greater contribution.
std::vector<AlignmentTarget> best_alignment(std::span<const Unit> hypothesis,
                                            std::span<const TargetUnit> targets,
                                            std::span<const double> block_weights,
                                            const Resources& resources);

/// Sentences of the snippet, with first-mention variants applied per flag.
std::vector<const Sentence*> snippet_sentences(const AnswerEntailingStructure& z, const Resources& resources);

/// The snippet block z4 for the given sentences.
std::vector<double> snippet_block(const Hypothesis& h,
                                  std::span<const Sentence* const> sentences,
                                  const Resources& resources);

/// The textbook/chapter/section retrieval block for the node holding `section`.
std::array<double, FeatureLayout::retrieval_size> retrieval_block(const Hypothesis& h,
                                                                  SectionRef section,
                                                                  Granularity granularity,
                                                                  const Resources& resources);

/// ψ(h, z). Blocks listed in the resources' mask come out as zero.
FeatureVector feature_map(const Hypothesis& h, const AnswerEntailingStructure& z, const Resources& resources);

/// Throws `ErrorKind::invalid_argument` when `z` violates the hierarchy or
/// size invariants.
void validate_structure(const Hypothesis& h, const AnswerEntailingStructure& z, const Resources& resources);

/// FNV-1a hash cell of (RST relation, question word).
std::size_t rst_cell(std::string_view relation, std::string_view qword, std::size_t cells);

}  // namespace eqa
