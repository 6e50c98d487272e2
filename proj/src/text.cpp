#include "eqa/text.hpp"

#include <algorithm>
#include <cctype>

#include "eqa/error.hpp"

namespace eqa {

std::string_view to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::parse: return "parse";
    case ErrorKind::duplicate_id: return "duplicate-id";
    case ErrorKind::empty_node: return "empty-node";
    case ErrorKind::span: return "span";
    case ErrorKind::annotation: return "annotation";
    case ErrorKind::unknown_id: return "unknown-id";
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::config: return "config";
    case ErrorKind::version: return "version";
    case ErrorKind::corrupt: return "corrupt";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_punct(char c)
{
    auto u = static_cast<unsigned char>(c);
    return u < 0x80 && std::ispunct(u) != 0;
}

struct RawToken {
    std::size_t begin;
    std::size_t end;
};

// Whitespace split of [begin, end) followed by punctuation stripping.
void scan_tokens(std::string_view text, std::size_t begin, std::size_t end, std::vector<RawToken>& out)
{
    std::size_t i = begin;
    while (i < end) {
        while (i < end && is_space(text[i])) {
            ++i;
        }
        std::size_t start = i;
        while (i < end && !is_space(text[i])) {
            ++i;
        }
        std::size_t stop = i;
        while (start < stop && is_punct(text[start])) {
            ++start;
        }
        while (stop > start && is_punct(text[stop - 1])) {
            --stop;
        }
        if (start < stop) {
            out.push_back({start, stop});
        }
    }
}

}  // namespace

std::string to_lower_ascii(std::string_view text)
{
    std::string out(text);
    for (auto& c : out) {
        auto u = static_cast<unsigned char>(c);
        if (u < 0x80) {
            c = static_cast<char>(std::tolower(u));
        }
    }
    return out;
}

std::string trim(std::string_view text)
{
    std::size_t b = 0;
    std::size_t e = text.size();
    while (b < e && is_space(text[b])) {
        ++b;
    }
    while (e > b && is_space(text[e - 1])) {
        --e;
    }
    return std::string(text.substr(b, e - b));
}

std::vector<Unit> tokenize(std::string_view text, std::span<const CharSpan> mwe_spans)
{
    std::vector<CharSpan> spans(mwe_spans.begin(), mwe_spans.end());
    std::sort(spans.begin(), spans.end());
    for (std::size_t i = 0; i < spans.size(); ++i) {
        if (spans[i].begin >= spans[i].end || spans[i].end > text.size()) {
            fail(ErrorKind::span,
                 "mwe span [" + std::to_string(spans[i].begin) + ", " + std::to_string(spans[i].end)
                     + ") is out of bounds for text of length " + std::to_string(text.size()));
        }
        if (i > 0 && spans[i].begin < spans[i - 1].end) {
            fail(ErrorKind::span,
                 "mwe spans overlap at character " + std::to_string(spans[i].begin));
        }
    }

    std::vector<Unit> units;
    std::vector<RawToken> raw;
    auto emit_tokens = [&](std::size_t begin, std::size_t end) {
        raw.clear();
        scan_tokens(text, begin, end, raw);
        for (const auto& t : raw) {
            units.push_back(Unit{to_lower_ascii(text.substr(t.begin, t.end - t.begin)),
                                 UnitKind::token,
                                 CharSpan{t.begin, t.end}});
        }
    };

    std::size_t pos = 0;
    for (const auto& span : spans) {
        emit_tokens(pos, span.begin);
        raw.clear();
        scan_tokens(text, span.begin, span.end, raw);
        if (raw.size() < 2) {
            fail(ErrorKind::span,
                 "mwe span [" + std::to_string(span.begin) + ", " + std::to_string(span.end)
                     + ") covers fewer than two tokens");
        }
        std::string surface;
        for (const auto& t : raw) {
            if (!surface.empty()) {
                surface += ' ';
            }
            surface += to_lower_ascii(text.substr(t.begin, t.end - t.begin));
        }
        units.push_back(Unit{std::move(surface), UnitKind::mwe, CharSpan{raw.front().begin, raw.back().end}});
        pos = span.end;
    }
    emit_tokens(pos, text.size());
    return units;
}

std::vector<std::string> words_of(const Unit& unit)
{
    std::vector<std::string> words;
    std::size_t start = 0;
    const auto& s = unit.surface;
    while (start <= s.size()) {
        auto next = s.find(' ', start);
        if (next == std::string::npos) {
            next = s.size();
        }
        if (next > start) {
            words.push_back(s.substr(start, next - start));
        }
        start = next + 1;
    }
    return words;
}

std::vector<std::string> split_sentences(std::string_view text)
{
    std::vector<std::string> sentences;
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if ((c == '.' || c == '?' || c == '!') && (i + 1 == text.size() || is_space(text[i + 1]))) {
            auto s = trim(text.substr(start, i + 1 - start));
            if (!s.empty()) {
                sentences.push_back(std::move(s));
            }
            start = i + 1;
        }
    }
    auto tail = trim(text.substr(std::min(start, text.size())));
    if (!tail.empty()) {
        sentences.push_back(std::move(tail));
    }
    return sentences;
}

void MweLexicon::add(std::string_view surface)
{
    auto s = to_lower_ascii(surface);
    auto words = std::count(s.begin(), s.end(), ' ') + 1;
    if (words < 2) {
        return;
    }
    max_words_ = std::max(max_words_, static_cast<std::size_t>(words));
    entries_.insert(std::move(s));
}

void MweLexicon::add_from(std::span<const Unit> units)
{
    for (const auto& u : units) {
        if (u.kind == UnitKind::mwe) {
            add(u.surface);
        }
    }
}

bool MweLexicon::contains(std::string_view surface) const
{
    return entries_.contains(std::string(surface));
}

std::vector<Unit> MweLexicon::merge(std::vector<Unit> units) const
{
    if (max_words_ < 2) {
        return units;
    }
    std::vector<Unit> out;
    out.reserve(units.size());
    std::size_t i = 0;
    while (i < units.size()) {
        bool merged = false;
        if (units[i].kind == UnitKind::token) {
            for (std::size_t len = std::min(max_words_, units.size() - i); len >= 2; --len) {
                std::string candidate = units[i].surface;
                bool all_tokens = true;
                for (std::size_t k = 1; k < len; ++k) {
                    if (units[i + k].kind != UnitKind::token) {
                        all_tokens = false;
                        break;
                    }
                    candidate += ' ';
                    candidate += units[i + k].surface;
                }
                if (all_tokens && entries_.contains(candidate)) {
                    out.push_back(Unit{std::move(candidate),
                                       UnitKind::mwe,
                                       CharSpan{units[i].source.begin, units[i + len - 1].source.end}});
                    i += len;
                    merged = true;
                    break;
                }
            }
        }
        if (!merged) {
            out.push_back(std::move(units[i]));
            ++i;
        }
    }
    return out;
}

}  // namespace eqa
