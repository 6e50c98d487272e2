#include "eqa/index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "eqa/error.hpp"
#include "json_util.hpp"

namespace eqa {

using nlohmann::json;

namespace {

constexpr int index_cache_version = 1;

void validate_bm25(Bm25Params p)
{
    if (!(p.k1 > 0.0) || !(p.b >= 0.0 && p.b <= 1.0)) {
        fail(ErrorKind::invalid_argument, "bm25 requires k1 > 0 and 0 <= b <= 1");
    }
}

void check_doc(const Index& index, std::size_t doc)
{
    if (doc >= index.n_docs()) {
        fail(ErrorKind::unknown_id, "unknown document number " + std::to_string(doc));
    }
}

Granularity granularity_from(const std::string& s)
{
    if (s == "textbook") {
        return Granularity::textbook;
    }
    if (s == "chapter") {
        return Granularity::chapter;
    }
    if (s == "section") {
        return Granularity::section;
    }
    fail(ErrorKind::corrupt, "unknown granularity \"" + s + "\"");
}

json index_to_json(const Index& index)
{
    json docs = json::array();
    // Term frequencies are regrouped per document so the file is stable.
    std::vector<std::map<std::string, std::uint32_t>> tfs(index.n_docs());
    for (const auto& [term, list] : index.postings) {
        for (const auto& p : list) {
            tfs[p.doc][term] = p.tf;
        }
    }
    for (std::size_t d = 0; d < index.n_docs(); ++d) {
        std::vector<std::string> bi(index.bigrams[d].begin(), index.bigrams[d].end());
        std::vector<std::string> tri(index.trigrams[d].begin(), index.trigrams[d].end());
        std::sort(bi.begin(), bi.end());
        std::sort(tri.begin(), tri.end());
        docs.push_back({{"id", index.doc_ids[d]},
                        {"length", index.doc_lengths[d]},
                        {"tf", tfs[d]},
                        {"bigrams", bi},
                        {"trigrams", tri}});
    }
    return {{"granularity", std::string(to_string(index.granularity))},
            {"chapter_base", index.chapter_base},
            {"section_base", index.section_base},
            {"docs", std::move(docs)}};
}

Index index_from_json(const json& j)
{
    Index index;
    index.granularity = granularity_from(j.at("granularity").get<std::string>());
    index.chapter_base = j.at("chapter_base").get<std::vector<std::size_t>>();
    index.section_base = j.at("section_base").get<std::vector<std::vector<std::size_t>>>();
    std::size_t total = 0;
    for (const auto& d : j.at("docs")) {
        const auto doc = index.doc_ids.size();
        index.doc_ids.push_back(d.at("id").get<std::string>());
        index.doc_lengths.push_back(d.at("length").get<std::size_t>());
        total += index.doc_lengths.back();
        for (const auto& [term, tf] : d.at("tf").items()) {
            index.postings[term].push_back(Posting{doc, tf.get<std::uint32_t>()});
        }
        auto bi = d.at("bigrams").get<std::vector<std::string>>();
        auto tri = d.at("trigrams").get<std::vector<std::string>>();
        index.bigrams.emplace_back(bi.begin(), bi.end());
        index.trigrams.emplace_back(tri.begin(), tri.end());
    }
    if (index.doc_ids.empty()) {
        fail(ErrorKind::corrupt, "index cache holds no documents");
    }
    index.avg_doc_length = static_cast<double>(total) / static_cast<double>(index.n_docs());
    return index;
}

}  // namespace

std::string_view to_string(Granularity g) noexcept
{
    switch (g) {
    case Granularity::textbook: return "textbook";
    case Granularity::chapter: return "chapter";
    case Granularity::section: return "section";
    }
    return "section";
}

NgramSet ngrams(std::span<const Unit> units, int n)
{
    NgramSet out;
    const auto len = static_cast<std::size_t>(n);
    if (n <= 0 || units.size() < len) {
        return out;
    }
    for (std::size_t i = 0; i + len <= units.size(); ++i) {
        std::string key = units[i].surface;
        for (std::size_t k = 1; k < len; ++k) {
            key += '\x1f';
            key += units[i + k].surface;
        }
        out.insert(std::move(key));
    }
    return out;
}

std::size_t Index::doc_index(std::string_view doc_id) const
{
    auto it = std::find(doc_ids.begin(), doc_ids.end(), doc_id);
    if (it == doc_ids.end()) {
        fail(ErrorKind::unknown_id, "unknown document \"" + std::string(doc_id) + "\"");
    }
    return static_cast<std::size_t>(it - doc_ids.begin());
}

std::size_t Index::document_frequency(std::string_view term) const
{
    auto it = postings.find(std::string(term));
    return it == postings.end() ? 0 : it->second.size();
}

std::uint32_t Index::term_frequency(std::string_view term, std::size_t doc) const
{
    auto it = postings.find(std::string(term));
    if (it == postings.end()) {
        return 0;
    }
    auto p = std::lower_bound(it->second.begin(), it->second.end(), doc,
                              [](const Posting& a, std::size_t d) { return a.doc < d; });
    return (p != it->second.end() && p->doc == doc) ? p->tf : 0;
}

std::size_t Index::doc_for(SectionRef ref) const
{
    switch (granularity) {
    case Granularity::textbook: return ref.textbook;
    case Granularity::chapter: return chapter_base.at(ref.textbook) + ref.chapter;
    case Granularity::section: return section_base.at(ref.textbook).at(ref.chapter) + ref.section;
    }
    return 0;
}

Index build_index(const Curriculum& curriculum, Granularity granularity)
{
    Index index;
    index.granularity = granularity;

    std::vector<std::vector<Unit>> docs;
    for (const auto& tb : curriculum.textbooks()) {
        index.chapter_base.push_back(granularity == Granularity::chapter ? docs.size() : 0);
        index.section_base.emplace_back();
        if (granularity == Granularity::textbook) {
            index.doc_ids.push_back(tb.id);
            docs.emplace_back();
        }
        for (const auto& ch : tb.chapters) {
            index.section_base.back().push_back(granularity == Granularity::section ? docs.size() : 0);
            if (granularity == Granularity::chapter) {
                index.doc_ids.push_back(tb.id + "/" + ch.id);
                docs.emplace_back();
            }
            for (const auto& sec : ch.sections) {
                if (granularity == Granularity::section) {
                    index.doc_ids.push_back(tb.id + "/" + ch.id + "/" + sec.id);
                    docs.emplace_back();
                }
                for (const auto& s : sec.sentences) {
                    docs.back().insert(docs.back().end(), s.units.begin(), s.units.end());
                }
            }
        }
    }

    std::size_t total = 0;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        const auto& units = docs[d];
        index.doc_lengths.push_back(units.size());
        total += units.size();
        std::map<std::string, std::uint32_t> tf;
        for (const auto& u : units) {
            ++tf[u.surface];
        }
        for (const auto& [term, count] : tf) {
            index.postings[term].push_back(Posting{d, count});
        }
        index.bigrams.push_back(ngrams(units, 2));
        index.trigrams.push_back(ngrams(units, 3));
    }
    index.avg_doc_length = static_cast<double>(total) / static_cast<double>(docs.size());
    return index;
}

double tfidf_score(const Index& index, std::span<const Unit> query, std::size_t doc)
{
    check_doc(index, doc);
    const auto n = static_cast<double>(index.n_docs());
    double score = 0.0;
    for (const auto& u : query) {
        auto df = index.document_frequency(u.surface);
        if (df == 0) {
            continue;
        }
        auto tf = index.term_frequency(u.surface, doc);
        score += static_cast<double>(tf) * std::log(n / static_cast<double>(df));
    }
    return score;
}

double tfidf_score(const Index& index, std::span<const Unit> query, std::string_view doc_id)
{
    return tfidf_score(index, query, index.doc_index(doc_id));
}

double bm25_score(const Index& index, std::span<const Unit> query, std::size_t doc, Bm25Params params)
{
    validate_bm25(params);
    check_doc(index, doc);
    const auto n = static_cast<double>(index.n_docs());
    const auto norm = 1.0 - params.b
                      + params.b * static_cast<double>(index.doc_lengths[doc])
                            / std::max(index.avg_doc_length, 1e-12);
    double score = 0.0;
    for (const auto& u : query) {
        auto tf = static_cast<double>(index.term_frequency(u.surface, doc));
        if (tf == 0.0) {
            continue;
        }
        auto df = static_cast<double>(index.document_frequency(u.surface));
        auto idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
        score += idf * tf * (params.k1 + 1.0) / (tf + params.k1 * norm);
    }
    return std::max(score, 0.0);
}

double bm25_score(const Index& index, std::span<const Unit> query, std::string_view doc_id, Bm25Params params)
{
    return bm25_score(index, query, index.doc_index(doc_id), params);
}

double ngram_jaccard(const NgramSet& a, const NgramSet& b)
{
    if (a.empty() && b.empty()) {
        return 0.0;
    }
    const auto& small = a.size() <= b.size() ? a : b;
    const auto& large = a.size() <= b.size() ? b : a;
    std::size_t common = 0;
    for (const auto& g : small) {
        common += large.contains(g) ? 1 : 0;
    }
    auto uni = a.size() + b.size() - common;
    return static_cast<double>(common) / static_cast<double>(uni);
}

double ngram_jaccard(std::span<const Unit> a, std::span<const Unit> b, int n)
{
    if (n != 2 && n != 3) {
        fail(ErrorKind::invalid_argument, "ngram_jaccard supports n = 2 or n = 3");
    }
    return ngram_jaccard(ngrams(a, n), ngrams(b, n));
}

const Index& IndexSet::at(Granularity g) const
{
    switch (g) {
    case Granularity::textbook: return textbook;
    case Granularity::chapter: return chapter;
    case Granularity::section: return section;
    }
    return section;
}

IndexSet build_indices(const Curriculum& curriculum)
{
    return IndexSet{build_index(curriculum, Granularity::textbook),
                    build_index(curriculum, Granularity::chapter),
                    build_index(curriculum, Granularity::section)};
}

void save_index_cache(const IndexSet& indices, std::uint64_t corpus_hash, const std::filesystem::path& path)
{
    json j{{"version", index_cache_version},
           {"corpus_hash", corpus_hash},
           {"indices", json::array({index_to_json(indices.textbook), index_to_json(indices.chapter),
                                    index_to_json(indices.section)})}};
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        fail(ErrorKind::io, "cannot write \"" + path.string() + "\"");
    }
    out << j.dump() << '\n';
}

std::optional<IndexSet> load_index_cache(const std::filesystem::path& path, std::uint64_t corpus_hash)
{
    if (!std::filesystem::exists(path)) {
        return std::nullopt;
    }
    auto j = detail::parse_json(read_file(path), "index cache");
    try {
        if (j.at("version").get<int>() != index_cache_version) {
            return std::nullopt;
        }
        if (j.at("corpus_hash").get<std::uint64_t>() != corpus_hash) {
            return std::nullopt;
        }
        const auto& list = j.at("indices");
        if (list.size() != 3) {
            fail(ErrorKind::corrupt, "index cache must hold three indices");
        }
        return IndexSet{index_from_json(list[0]), index_from_json(list[1]), index_from_json(list[2])};
    } catch (const json::exception& e) {
        fail(ErrorKind::corrupt, std::string("index cache: ") + e.what());
    }
}

}  // namespace eqa
