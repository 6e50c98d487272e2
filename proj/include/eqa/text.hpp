#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace eqa {

enum class UnitKind : std::uint8_t { token, mwe };

/// Half-open character (byte) range [begin, end).
struct CharSpan {
    std::size_t begin = 0;
    std::size_t end = 0;

    auto operator<=>(const CharSpan&) const = default;
};

/// One alignable unit of text: a single token or a merged multi-word
/// expression. Surfaces are lower-cased; words inside an MWE are separated by
/// a single space.
struct Unit {
    std::string surface;
    UnitKind kind = UnitKind::token;
    CharSpan source;

    bool operator==(const Unit&) const = default;
};

std::string to_lower_ascii(std::string_view text);

/// Splits `text` into units.
///
/// Tokens are whitespace-delimited, lower-cased, and stripped of leading and
/// trailing ASCII punctuation; punctuation-only tokens are dropped. All tokens
/// falling inside one of `mwe_spans` are emitted as a single MWE unit, which
/// must cover at least two tokens. Spans must lie within the text and must
/// not overlap. Bytes >= 0x80 are treated as word characters.
std::vector<Unit> tokenize(std::string_view text, std::span<const CharSpan> mwe_spans = {});

/// Words making up a unit (one element for tokens).
std::vector<std::string> words_of(const Unit& unit);

/// Sentence segmentation on '.', '?' and '!' followed by whitespace or end of
/// text. Returns trimmed, non-empty sentences.
std::vector<std::string> split_sentences(std::string_view text);

std::string trim(std::string_view text);

inline constexpr std::uint64_t fnv_offset_basis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t fnv_prime = 0x100000001b3ULL;

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a64(std::string_view data, std::uint64_t state = fnv_offset_basis) noexcept
{
    for (unsigned char c : data) {
        state ^= c;
        state *= fnv_prime;
    }
    return state;
}

/// Surfaces of known multi-word expressions. Used to merge MWEs in text that
/// carries no annotation of its own (generated hypotheses, questions).
class MweLexicon {
  public:
    void add(std::string_view surface);
    void add_from(std::span<const Unit> units);

    [[nodiscard]] bool contains(std::string_view surface) const;
    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }

    /// Greedy longest-match merge of adjacent token units.
    [[nodiscard]] std::vector<Unit> merge(std::vector<Unit> units) const;

  private:
    std::unordered_set<std::string> entries_;
    std::size_t max_words_ = 0;
};

}  // namespace eqa
