#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "eqa/corpus.hpp"
#include "eqa/text.hpp"

namespace eqa {

enum class Granularity : std::uint8_t { textbook, chapter, section };

std::string_view to_string(Granularity g) noexcept;

struct Posting {
    std::size_t doc = 0;
    std::uint32_t tf = 0;

    bool operator==(const Posting&) const = default;
};

/// Set of n-grams over unit surfaces; elements are surfaces joined by '\x1f'.
using NgramSet = std::unordered_set<std::string>;

NgramSet ngrams(std::span<const Unit> units, int n);

/// Inverted index with one document per curriculum node at a fixed
/// granularity. Documents are numbered in hierarchy order; a document's text
/// is the concatenation of the units of all descendant sentences.
struct Index {
    Granularity granularity = Granularity::section;
    std::vector<std::string> doc_ids;
    std::vector<std::size_t> doc_lengths;
    /// Postings are sorted by document number.
    std::unordered_map<std::string, std::vector<Posting>> postings;
    double avg_doc_length = 0.0;
    std::vector<NgramSet> bigrams;
    std::vector<NgramSet> trigrams;

    [[nodiscard]] std::size_t n_docs() const noexcept { return doc_ids.size(); }
    [[nodiscard]] std::size_t doc_index(std::string_view doc_id) const;
    [[nodiscard]] std::size_t document_frequency(std::string_view term) const;
    [[nodiscard]] std::uint32_t term_frequency(std::string_view term, std::size_t doc) const;

    /// Document holding the given node (chapter/section ignored at coarser
    /// granularities).
    [[nodiscard]] std::size_t doc_for(SectionRef ref) const;

    bool operator==(const Index&) const = default;

    // Node -> document lookup tables.
    std::vector<std::size_t> chapter_base;
    std::vector<std::vector<std::size_t>> section_base;
};

Index build_index(const Curriculum& curriculum, Granularity granularity);

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;

    bool operator==(const Bm25Params&) const = default;
};

/// Sum over query units of tf * ln(N / df); absent terms contribute 0.
double tfidf_score(const Index& index, std::span<const Unit> query, std::size_t doc);
double tfidf_score(const Index& index, std::span<const Unit> query, std::string_view doc_id);

/// Okapi BM25 with idf = ln((N - df + 0.5) / (df + 0.5) + 1).
double bm25_score(const Index& index, std::span<const Unit> query, std::size_t doc, Bm25Params params = {});
double bm25_score(const Index& index, std::span<const Unit> query, std::string_view doc_id, Bm25Params params = {});

/// |A ∩ B| / |A ∪ B| over n-gram sets; 0 when both are empty.
double ngram_jaccard(std::span<const Unit> a, std::span<const Unit> b, int n);
double ngram_jaccard(const NgramSet& a, const NgramSet& b);

/// Textbook, chapter and section indices over one curriculum.
struct IndexSet {
    Index textbook;
    Index chapter;
    Index section;

    [[nodiscard]] const Index& at(Granularity g) const;
};

IndexSet build_indices(const Curriculum& curriculum);

/// Cache file holding all three indices, keyed by the corpus content hash.
void save_index_cache(const IndexSet& indices, std::uint64_t corpus_hash, const std::filesystem::path& path);

/// Returns nullopt when the file is missing or was built from another corpus.
std::optional<IndexSet> load_index_cache(const std::filesystem::path& path, std::uint64_t corpus_hash);

}  // namespace eqa
