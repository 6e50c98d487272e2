#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "eqa/text.hpp"

namespace eqa {

enum class KnowledgeKind : std::uint8_t { triple, equivalence };

/// A triple (subject, relation, object) or an equivalence (left, right).
struct KnowledgeBit {
    std::string id;
    KnowledgeKind kind = KnowledgeKind::triple;
    std::vector<std::vector<Unit>> parts;
    std::string source;

    /// All units of all parts, in order. Alignment targets index into this.
    [[nodiscard]] std::vector<Unit> units() const;
};

class KnowledgeStore {
  public:
    KnowledgeStore() = default;
    explicit KnowledgeStore(std::vector<KnowledgeBit> bits);

    [[nodiscard]] const std::vector<KnowledgeBit>& bits() const noexcept { return bits_; }
    [[nodiscard]] const KnowledgeBit& at(std::size_t i) const { return bits_.at(i); }
    [[nodiscard]] std::size_t find(std::string_view id) const;
    [[nodiscard]] std::size_t size() const noexcept { return bits_.size(); }

    /// Cached `bits()[i].units()`.
    [[nodiscard]] const std::vector<Unit>& units_of(std::size_t i) const { return units_.at(i); }

  private:
    std::vector<KnowledgeBit> bits_;
    std::vector<std::vector<Unit>> units_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

/// Parts are strings (one unit; multi-word strings become an MWE) or arrays
/// of strings (one unit each).
KnowledgeStore parse_knowledge(std::string_view jsonl);
KnowledgeStore load_knowledge(const std::filesystem::path& path);

class EmbeddingTable {
  public:
    explicit EmbeddingTable(std::size_t dimension = 1);

    void add(std::string word, std::vector<double> vector);

    [[nodiscard]] std::size_t dimension() const noexcept { return dimension_; }
    [[nodiscard]] std::size_t size() const noexcept { return vectors_.size(); }

    /// Zero vector for unknown words.
    [[nodiscard]] std::span<const double> lookup(std::string_view word) const;

  private:
    std::size_t dimension_;
    std::unordered_map<std::string, std::vector<double>> vectors_;
    std::vector<double> zero_;
};

/// Text format: first line "D", then one row per word: word followed by D
/// space-separated reals.
EmbeddingTable parse_embeddings(std::string_view text);
EmbeddingTable load_embeddings(const std::filesystem::path& path);

/// Bit flags for lexical relations.
enum LexicalRelation : std::uint8_t {
    antonymy = 1U << 0U,
    class_inclusion = 1U << 1U,
    is_a = 1U << 2U,
};

class LexicalRelationTable {
  public:
    /// Antonymy is recorded in both directions; the others only as given.
    void add(std::string_view a, std::string_view b, LexicalRelation relation);

    /// Bitwise OR of the relations holding from `a` to `b`.
    [[nodiscard]] std::uint8_t relations(std::string_view a, std::string_view b) const;

    [[nodiscard]] std::size_t size() const noexcept { return table_.size(); }

  private:
    std::unordered_map<std::string, std::uint8_t> table_;
};

LexicalRelationTable parse_lexical_relations(std::string_view jsonl);
LexicalRelationTable load_lexical_relations(const std::filesystem::path& path);

/// Token vector, or the element-wise sum over an MWE's words.
std::vector<double> unit_vector(const Unit& unit, const EmbeddingTable& table);

/// Cosine similarity; 0 if either vector is zero.
double cosine(std::span<const double> a, std::span<const double> b);

/// Picks up to `k` bits explaining hypothesis units that the snippet does not
/// cover. A bit's score is the number of distinct uncovered surfaces among
/// its units; bits scoring 0 are dropped and ties go to the smaller id.
/// Returns positions in `store`.
std::vector<std::size_t> select_knowledge_bits(std::span<const Unit> hypothesis,
                                               const std::unordered_set<std::string>& snippet_surfaces,
                                               const KnowledgeStore& store,
                                               std::size_t k = 5);

}  // namespace eqa
