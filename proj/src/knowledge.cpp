#include "eqa/knowledge.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "eqa/corpus.hpp"
#include "eqa/error.hpp"
#include "json_util.hpp"

namespace eqa {

using nlohmann::json;

namespace {

std::string pair_key(std::string_view a, std::string_view b)
{
    std::string key(a);
    key += '\x1f';
    key += b;
    return key;
}

std::vector<Unit> part_units(const json& part, const std::string& ctx)
{
    std::vector<Unit> units;
    auto add = [&](const std::string& text) {
        auto tokens = tokenize(text);
        if (tokens.empty()) {
            fail(ErrorKind::parse, ctx + ": empty knowledge part");
        }
        if (tokens.size() == 1) {
            units.push_back(std::move(tokens.front()));
            return;
        }
        std::string surface;
        for (const auto& t : tokens) {
            if (!surface.empty()) {
                surface += ' ';
            }
            surface += t.surface;
        }
        units.push_back(Unit{std::move(surface), UnitKind::mwe, CharSpan{tokens.front().source.begin,
                                                                          tokens.back().source.end}});
    };
    if (part.is_string()) {
        add(part.get<std::string>());
    } else if (part.is_array()) {
        for (const auto& p : part) {
            add(p.get<std::string>());
        }
    } else {
        fail(ErrorKind::parse, ctx + ": a knowledge part must be a string or an array of strings");
    }
    if (units.empty()) {
        fail(ErrorKind::parse, ctx + ": empty knowledge part");
    }
    return units;
}

}  // namespace

std::vector<Unit> KnowledgeBit::units() const
{
    std::vector<Unit> out;
    for (const auto& p : parts) {
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

KnowledgeStore::KnowledgeStore(std::vector<KnowledgeBit> bits) : bits_(std::move(bits))
{
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        const auto& b = bits_[i];
        const std::size_t expected = b.kind == KnowledgeKind::triple ? 3 : 2;
        if (b.parts.size() != expected) {
            fail(ErrorKind::parse, "knowledge bit \"" + b.id + "\" must have " + std::to_string(expected) + " parts");
        }
        for (const auto& p : b.parts) {
            if (p.empty()) {
                fail(ErrorKind::parse, "knowledge bit \"" + b.id + "\" has an empty part");
            }
        }
        if (!by_id_.emplace(b.id, i).second) {
            fail(ErrorKind::duplicate_id, "duplicate knowledge id \"" + b.id + "\"");
        }
        units_.push_back(b.units());
    }
}

std::size_t KnowledgeStore::find(std::string_view id) const
{
    auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) {
        fail(ErrorKind::unknown_id, "unknown knowledge bit \"" + std::string(id) + "\"");
    }
    return it->second;
}

KnowledgeStore parse_knowledge(std::string_view jsonl)
{
    std::vector<KnowledgeBit> bits;
    detail::for_each_jsonl(jsonl, "knowledge", [&](json j, std::size_t line) {
        auto ctx = "knowledge line " + std::to_string(line);
        KnowledgeBit bit;
        bit.id = detail::require<std::string>(j, "id", ctx);
        auto kind = detail::require<std::string>(j, "kind", ctx);
        if (kind == "triple") {
            bit.kind = KnowledgeKind::triple;
        } else if (kind == "equiv" || kind == "equivalence") {
            bit.kind = KnowledgeKind::equivalence;
        } else {
            fail(ErrorKind::parse, ctx + ": unknown kind \"" + kind + "\"");
        }
        for (const auto& part : detail::require_field(j, "parts", ctx)) {
            bit.parts.push_back(part_units(part, ctx));
        }
        bit.source = j.value("source", std::string{});
        bits.push_back(std::move(bit));
    });
    return KnowledgeStore(std::move(bits));
}

KnowledgeStore load_knowledge(const std::filesystem::path& path)
{
    return parse_knowledge(read_file(path));
}

EmbeddingTable::EmbeddingTable(std::size_t dimension) : dimension_(dimension), zero_(dimension, 0.0)
{
    if (dimension == 0) {
        fail(ErrorKind::dimension, "embedding dimension must be positive");
    }
}

void EmbeddingTable::add(std::string word, std::vector<double> vector)
{
    if (vector.size() != dimension_) {
        fail(ErrorKind::dimension, "embedding for \"" + word + "\" has " + std::to_string(vector.size())
                                       + " components; expected " + std::to_string(dimension_));
    }
    vectors_[std::move(word)] = std::move(vector);
}

std::span<const double> EmbeddingTable::lookup(std::string_view word) const
{
    auto it = vectors_.find(std::string(word));
    return it == vectors_.end() ? std::span<const double>(zero_) : std::span<const double>(it->second);
}

EmbeddingTable parse_embeddings(std::string_view text)
{
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    std::size_t dim = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") != std::string::npos) {
            std::istringstream hs(line);
            long long d = 0;
            if (!(hs >> d) || d <= 0) {
                fail(ErrorKind::parse, "embeddings line " + std::to_string(line_no) + ": expected dimension header");
            }
            dim = static_cast<std::size_t>(d);
            break;
        }
    }
    if (dim == 0) {
        fail(ErrorKind::parse, "embeddings: missing dimension header");
    }
    EmbeddingTable table(dim);
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream row(line);
        std::string word;
        if (!(row >> word)) {
            continue;
        }
        std::vector<double> values;
        std::string tok;
        while (row >> tok) {
            try {
                std::size_t used = 0;
                values.push_back(std::stod(tok, &used));
                if (used != tok.size()) {
                    throw std::invalid_argument(tok);
                }
            } catch (const std::exception&) {
                fail(ErrorKind::parse, "embeddings line " + std::to_string(line_no) + ": bad number \"" + tok + "\"");
            }
        }
        if (values.size() != dim) {
            fail(ErrorKind::dimension, "embeddings line " + std::to_string(line_no) + ": " + std::to_string(values.size())
                                           + " components; expected " + std::to_string(dim));
        }
        table.add(to_lower_ascii(word), std::move(values));
    }
    return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path)
{
    return parse_embeddings(read_file(path));
}

void LexicalRelationTable::add(std::string_view a, std::string_view b, LexicalRelation relation)
{
    auto la = to_lower_ascii(a);
    auto lb = to_lower_ascii(b);
    table_[pair_key(la, lb)] |= relation;
    if (relation == LexicalRelation::antonymy) {
        table_[pair_key(lb, la)] |= relation;
    }
}

std::uint8_t LexicalRelationTable::relations(std::string_view a, std::string_view b) const
{
    auto it = table_.find(pair_key(a, b));
    return it == table_.end() ? 0 : it->second;
}

LexicalRelationTable parse_lexical_relations(std::string_view jsonl)
{
    LexicalRelationTable table;
    detail::for_each_jsonl(jsonl, "relations", [&](json j, std::size_t line) {
        auto ctx = "relations line " + std::to_string(line);
        auto rel = detail::require<std::string>(j, "rel", ctx);
        LexicalRelation r{};
        if (rel == "antonymy") {
            r = LexicalRelation::antonymy;
        } else if (rel == "class_inclusion") {
            r = LexicalRelation::class_inclusion;
        } else if (rel == "is_a") {
            r = LexicalRelation::is_a;
        } else {
            fail(ErrorKind::parse, ctx + ": unknown relation \"" + rel + "\"");
        }
        table.add(detail::require<std::string>(j, "a", ctx), detail::require<std::string>(j, "b", ctx), r);
    });
    return table;
}

LexicalRelationTable load_lexical_relations(const std::filesystem::path& path)
{
    return parse_lexical_relations(read_file(path));
}

std::vector<double> unit_vector(const Unit& unit, const EmbeddingTable& table)
{
    if (unit.kind == UnitKind::token) {
        auto v = table.lookup(unit.surface);
        return {v.begin(), v.end()};
    }
    std::vector<double> sum(table.dimension(), 0.0);
    for (const auto& w : words_of(unit)) {
        auto v = table.lookup(w);
        for (std::size_t i = 0; i < sum.size(); ++i) {
            sum[i] += v[i];
        }
    }
    return sum;
}

double cosine(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) {
        fail(ErrorKind::dimension, "cosine of vectors with different dimensions");
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<std::size_t> select_knowledge_bits(std::span<const Unit> hypothesis,
                                               const std::unordered_set<std::string>& snippet_surfaces,
                                               const KnowledgeStore& store,
                                               std::size_t k)
{
    std::unordered_set<std::string> uncovered;
    for (const auto& u : hypothesis) {
        if (!snippet_surfaces.contains(u.surface)) {
            uncovered.insert(u.surface);
        }
    }
    if (uncovered.empty() || k == 0) {
        return {};
    }

    struct Scored {
        std::size_t score;
        std::size_t bit;
    };
    std::vector<Scored> scored;
    for (std::size_t i = 0; i < store.size(); ++i) {
        std::unordered_set<std::string> hits;
        for (const auto& u : store.units_of(i)) {
            if (uncovered.contains(u.surface)) {
                hits.insert(u.surface);
            }
        }
        if (!hits.empty()) {
            scored.push_back({hits.size(), i});
        }
    }
    std::sort(scored.begin(), scored.end(), [&](const Scored& a, const Scored& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return store.at(a.bit).id < store.at(b.bit).id;
    });
    if (scored.size() > k) {
        scored.resize(k);
    }
    std::vector<std::size_t> out;
    out.reserve(scored.size());
    for (const auto& s : scored) {
        out.push_back(s.bit);
    }
    return out;
}

}  // namespace eqa
