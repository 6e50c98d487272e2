#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "eqa/text.hpp"

namespace eqa {

/// Half-open range of unit indices within one sentence.
struct UnitSpan {
    std::size_t begin = 0;
    std::size_t end = 0;

    bool operator==(const UnitSpan&) const = default;
};

struct DependencyEdge {
    std::size_t head = 0;
    std::size_t dependent = 0;
    std::string relation;

    bool operator==(const DependencyEdge&) const = default;
};

struct SrlFrame {
    std::size_t predicate = 0;
    std::string role;
    UnitSpan argument;

    bool operator==(const SrlFrame&) const = default;
};

/// Discourse relation in which the owning sentence takes part.
struct RstLink {
    std::string relation;
    std::string partner;

    bool operator==(const RstLink&) const = default;
};

struct CorefLink {
    UnitSpan mention;
    std::string antecedent_sentence;
    UnitSpan antecedent;

    bool operator==(const CorefLink&) const = default;
};

struct Sentence {
    std::string id;
    std::string text;
    std::vector<Unit> units;
    std::vector<DependencyEdge> dependency_edges;
    std::vector<SrlFrame> srl_frames;
    std::optional<RstLink> rst;
    std::vector<CorefLink> coref_links;

    bool operator==(const Sentence&) const = default;
};

struct Section {
    std::string id;
    std::string title;
    std::vector<Sentence> sentences;
    std::vector<std::string> review_question_ids;

    bool operator==(const Section&) const = default;
};

struct Chapter {
    std::string id;
    std::string title;
    std::vector<Section> sections;

    bool operator==(const Chapter&) const = default;
};

struct Textbook {
    std::string id;
    std::string title;
    std::vector<Chapter> chapters;

    bool operator==(const Textbook&) const = default;
};

struct SentenceLocation {
    std::size_t textbook = 0;
    std::size_t chapter = 0;
    std::size_t section = 0;
    std::size_t sentence = 0;
};

/// Position of a section in the hierarchy.
struct SectionRef {
    std::size_t textbook = 0;
    std::size_t chapter = 0;
    std::size_t section = 0;

    auto operator<=>(const SectionRef&) const = default;
};

/// textbook -> chapter -> section -> sentence. Validated on construction and
/// immutable afterwards.
class Curriculum {
  public:
    explicit Curriculum(std::vector<Textbook> textbooks);

    [[nodiscard]] const std::vector<Textbook>& textbooks() const noexcept { return textbooks_; }
    [[nodiscard]] const Section& section(SectionRef ref) const;
    [[nodiscard]] std::vector<SectionRef> sections() const;

    [[nodiscard]] const Sentence* find_sentence(std::string_view id) const;
    [[nodiscard]] std::optional<SentenceLocation> locate(std::string_view id) const;

    /// Resolves (textbook id, chapter id, section id).
    [[nodiscard]] std::optional<SectionRef> resolve(std::string_view textbook,
                                                    std::string_view chapter,
                                                    std::string_view section) const;

    [[nodiscard]] std::size_t sentence_count() const noexcept { return by_id_.size(); }
    [[nodiscard]] std::size_t unit_count() const noexcept;

    bool operator==(const Curriculum& other) const { return textbooks_ == other.textbooks_; }

  private:
    std::vector<Textbook> textbooks_;
    std::unordered_map<std::string, SentenceLocation> by_id_;
};

/// Parses corpus JSON, optionally merging an annotation sidecar (JSONL, one
/// record per sentence id). Sentences without a `units` layer are tokenized
/// with `tokenize(text, mwes)`.
Curriculum parse_corpus(std::string_view corpus_json, std::string_view annotations_jsonl = {});

Curriculum load_corpus(const std::filesystem::path& corpus_path,
                       const std::optional<std::filesystem::path>& annotations_path = std::nullopt);

/// Corpus JSON with every annotation layer inlined; `parse_corpus` of the
/// result reproduces the curriculum exactly.
std::string serialize_corpus(const Curriculum& curriculum);

/// Hash of the serialized form.
std::uint64_t content_hash(const Curriculum& curriculum);

/// Copy of `sentence` with each coreferent mention replaced by the units of
/// its chain-initial mention. Chains are followed through the antecedent
/// sentences' own links until a mention with no outgoing link is reached.
/// The copy carries no coreference links, so the operation is idempotent.
Sentence first_mention_substitute(const Sentence& sentence, const Curriculum& curriculum);

std::string read_file(const std::filesystem::path& path);

}  // namespace eqa
