#include "eqa/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "eqa/error.hpp"
#include "json_util.hpp"

namespace eqa {

using nlohmann::json;

namespace {

std::string section_path(const Textbook& tb, const Chapter& ch, const Section& sec)
{
    return tb.id + "/" + ch.id + "/" + sec.id;
}

void check_unique(std::unordered_set<std::string>& seen, const std::string& id, const std::string& scope)
{
    if (id.empty()) {
        fail(ErrorKind::parse, "empty id in " + scope);
    }
    if (!seen.insert(id).second) {
        fail(ErrorKind::duplicate_id, "duplicate id \"" + id + "\" in " + scope);
    }
}

void check_unit_span(const UnitSpan& span, std::size_t n, const std::string& what, const std::string& sid)
{
    if (span.begin >= span.end || span.end > n) {
        fail(ErrorKind::annotation,
             what + " span [" + std::to_string(span.begin) + ", " + std::to_string(span.end)
                 + ") out of range in sentence \"" + sid + "\"");
    }
}

void validate_sentence_local(const Sentence& s)
{
    const auto n = s.units.size();
    std::size_t prev_end = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& u = s.units[i];
        if (u.surface.empty()) {
            fail(ErrorKind::annotation, "empty unit surface in sentence \"" + s.id + "\"");
        }
        if (u.kind == UnitKind::mwe && words_of(u).size() < 2) {
            fail(ErrorKind::annotation,
                 "mwe unit \"" + u.surface + "\" covers fewer than two tokens in sentence \"" + s.id + "\"");
        }
        if (u.source.begin >= u.source.end || u.source.end > s.text.size()
            || (i > 0 && u.source.begin < prev_end)) {
            fail(ErrorKind::span, "unit spans overlap or exceed text in sentence \"" + s.id + "\"");
        }
        prev_end = u.source.end;
    }

    std::vector<std::optional<std::size_t>> head_of(n);
    for (const auto& e : s.dependency_edges) {
        if (e.head >= n || e.dependent >= n || e.head == e.dependent) {
            fail(ErrorKind::annotation, "dependency edge out of range in sentence \"" + s.id + "\"");
        }
        if (head_of[e.dependent]) {
            fail(ErrorKind::annotation,
                 "unit " + std::to_string(e.dependent) + " has two heads in sentence \"" + s.id + "\"");
        }
        head_of[e.dependent] = e.head;
    }
    for (std::size_t start = 0; start < n; ++start) {
        std::size_t cur = start;
        for (std::size_t steps = 0; head_of[cur]; ++steps) {
            if (steps > n) {
                fail(ErrorKind::annotation, "dependency cycle in sentence \"" + s.id + "\"");
            }
            cur = *head_of[cur];
        }
    }

    for (const auto& f : s.srl_frames) {
        if (f.predicate >= n) {
            fail(ErrorKind::annotation, "srl predicate out of range in sentence \"" + s.id + "\"");
        }
        check_unit_span(f.argument, n, "srl argument", s.id);
    }

    std::vector<UnitSpan> mentions;
    for (const auto& c : s.coref_links) {
        check_unit_span(c.mention, n, "coref mention", s.id);
        mentions.push_back(c.mention);
    }
    std::sort(mentions.begin(), mentions.end(), [](auto& a, auto& b) { return a.begin < b.begin; });
    for (std::size_t i = 1; i < mentions.size(); ++i) {
        if (mentions[i].begin < mentions[i - 1].end) {
            fail(ErrorKind::annotation, "overlapping coref mentions in sentence \"" + s.id + "\"");
        }
    }
}

UnitSpan span_from(const json& j, const std::string& ctx)
{
    if (!j.is_array() || j.size() != 2) {
        fail(ErrorKind::parse, ctx + ": expected [begin, end]");
    }
    return UnitSpan{j[0].get<std::size_t>(), j[1].get<std::size_t>()};
}

json span_to(const UnitSpan& s) { return json::array({s.begin, s.end}); }

Sentence sentence_from(const json& j)
{
    Sentence s;
    s.id = detail::require<std::string>(j, "id", "sentence");
    s.text = detail::require<std::string>(j, "text", "sentence \"" + s.id + "\"");
    const std::string ctx = "sentence \"" + s.id + "\"";

    if (auto it = j.find("units"); it != j.end()) {
        for (const auto& u : *it) {
            Unit unit;
            unit.surface = detail::require<std::string>(u, "surface", ctx);
            auto kind = u.value("kind", std::string("token"));
            if (kind == "mwe") {
                unit.kind = UnitKind::mwe;
            } else if (kind != "token") {
                fail(ErrorKind::parse, ctx + ": unknown unit kind \"" + kind + "\"");
            }
            auto span = span_from(detail::require_field(u, "span", ctx), ctx);
            unit.source = CharSpan{span.begin, span.end};
            s.units.push_back(std::move(unit));
        }
    } else {
        std::vector<CharSpan> mwes;
        if (auto m = j.find("mwes"); m != j.end()) {
            for (const auto& sp : *m) {
                auto span = span_from(sp, ctx);
                mwes.push_back(CharSpan{span.begin, span.end});
            }
        }
        s.units = tokenize(s.text, mwes);
    }

    if (auto it = j.find("deps"); it != j.end()) {
        for (const auto& e : *it) {
            if (!e.is_array() || e.size() != 3) {
                fail(ErrorKind::parse, ctx + ": dependency edge must be [head, dependent, relation]");
            }
            s.dependency_edges.push_back(
                DependencyEdge{e[0].get<std::size_t>(), e[1].get<std::size_t>(), e[2].get<std::string>()});
        }
    }
    if (auto it = j.find("srl"); it != j.end()) {
        for (const auto& f : *it) {
            if (!f.is_array() || f.size() != 4) {
                fail(ErrorKind::parse, ctx + ": srl frame must be [predicate, role, begin, end]");
            }
            s.srl_frames.push_back(SrlFrame{f[0].get<std::size_t>(),
                                            f[1].get<std::string>(),
                                            UnitSpan{f[2].get<std::size_t>(), f[3].get<std::size_t>()}});
        }
    }
    if (auto it = j.find("rst"); it != j.end() && !it->is_null()) {
        s.rst = RstLink{detail::require<std::string>(*it, "relation", ctx),
                        detail::require<std::string>(*it, "partner", ctx)};
    }
    if (auto it = j.find("coref"); it != j.end()) {
        for (const auto& c : *it) {
            s.coref_links.push_back(CorefLink{span_from(detail::require_field(c, "mention", ctx), ctx),
                                              detail::require<std::string>(c, "sentence", ctx),
                                              span_from(detail::require_field(c, "antecedent", ctx), ctx)});
        }
    }
    return s;
}

json sentence_to(const Sentence& s)
{
    json j;
    j["id"] = s.id;
    j["text"] = s.text;
    json units = json::array();
    for (const auto& u : s.units) {
        units.push_back({{"surface", u.surface},
                         {"kind", u.kind == UnitKind::mwe ? "mwe" : "token"},
                         {"span", json::array({u.source.begin, u.source.end})}});
    }
    j["units"] = std::move(units);
    if (!s.dependency_edges.empty()) {
        json deps = json::array();
        for (const auto& e : s.dependency_edges) {
            deps.push_back(json::array({e.head, e.dependent, e.relation}));
        }
        j["deps"] = std::move(deps);
    }
    if (!s.srl_frames.empty()) {
        json srl = json::array();
        for (const auto& f : s.srl_frames) {
            srl.push_back(json::array({f.predicate, f.role, f.argument.begin, f.argument.end}));
        }
        j["srl"] = std::move(srl);
    }
    if (s.rst) {
        j["rst"] = {{"relation", s.rst->relation}, {"partner", s.rst->partner}};
    }
    if (!s.coref_links.empty()) {
        json coref = json::array();
        for (const auto& c : s.coref_links) {
            coref.push_back({{"mention", span_to(c.mention)},
                             {"sentence", c.antecedent_sentence},
                             {"antecedent", span_to(c.antecedent)}});
        }
        j["coref"] = std::move(coref);
    }
    return j;
}

// Maps a unit index of the original sentence onto the sentence in which
// [begin, end) was replaced by `width` units.
std::size_t remap_index(std::size_t i, std::size_t begin, std::size_t end, std::size_t width)
{
    if (i < begin) {
        return i;
    }
    if (i < end) {
        return begin + std::min(i - begin, width - 1);
    }
    return i - (end - begin) + width;
}

}  // namespace

Curriculum::Curriculum(std::vector<Textbook> textbooks) : textbooks_(std::move(textbooks))
{
    if (textbooks_.empty()) {
        fail(ErrorKind::empty_node, "curriculum has no textbooks");
    }
    std::unordered_set<std::string> tb_ids;
    for (std::size_t t = 0; t < textbooks_.size(); ++t) {
        const auto& tb = textbooks_[t];
        check_unique(tb_ids, tb.id, "curriculum");
        if (tb.chapters.empty()) {
            fail(ErrorKind::empty_node, "textbook \"" + tb.id + "\" has no chapters");
        }
        std::unordered_set<std::string> ch_ids;
        for (std::size_t c = 0; c < tb.chapters.size(); ++c) {
            const auto& ch = tb.chapters[c];
            check_unique(ch_ids, ch.id, "textbook \"" + tb.id + "\"");
            if (ch.sections.empty()) {
                fail(ErrorKind::empty_node, "chapter \"" + tb.id + "/" + ch.id + "\" has no sections");
            }
            std::unordered_set<std::string> sec_ids;
            for (std::size_t s = 0; s < ch.sections.size(); ++s) {
                const auto& sec = ch.sections[s];
                check_unique(sec_ids, sec.id, "chapter \"" + tb.id + "/" + ch.id + "\"");
                if (sec.sentences.empty()) {
                    fail(ErrorKind::empty_node, "section \"" + section_path(tb, ch, sec) + "\" has no sentences");
                }
                for (std::size_t k = 0; k < sec.sentences.size(); ++k) {
                    const auto& sent = sec.sentences[k];
                    if (sent.id.empty()) {
                        fail(ErrorKind::parse, "empty sentence id in section \"" + section_path(tb, ch, sec) + "\"");
                    }
                    if (!by_id_.emplace(sent.id, SentenceLocation{t, c, s, k}).second) {
                        fail(ErrorKind::duplicate_id, "duplicate id \"" + sent.id + "\" in curriculum sentences");
                    }
                    validate_sentence_local(sent);
                }
            }
        }
    }

    // Cross-sentence references must stay inside the owning section.
    for (const auto& [id, loc] : by_id_) {
        const auto& sent = section(SectionRef{loc.textbook, loc.chapter, loc.section}).sentences[loc.sentence];
        auto same_section = [&](const std::string& other) -> const Sentence* {
            auto it = by_id_.find(other);
            if (it == by_id_.end() || it->second.textbook != loc.textbook || it->second.chapter != loc.chapter
                || it->second.section != loc.section) {
                return nullptr;
            }
            const auto& o = it->second;
            return &section(SectionRef{o.textbook, o.chapter, o.section}).sentences[o.sentence];
        };
        if (sent.rst && same_section(sent.rst->partner) == nullptr) {
            fail(ErrorKind::annotation,
                 "rst partner \"" + sent.rst->partner + "\" of sentence \"" + id + "\" is not in the same section");
        }
        for (const auto& link : sent.coref_links) {
            const auto* target = same_section(link.antecedent_sentence);
            if (target == nullptr) {
                fail(ErrorKind::annotation,
                     "coref antecedent \"" + link.antecedent_sentence + "\" of sentence \"" + id
                         + "\" does not resolve within its section");
            }
            check_unit_span(link.antecedent, target->units.size(), "coref antecedent", target->id);
        }
    }
}

const Section& Curriculum::section(SectionRef ref) const
{
    return textbooks_.at(ref.textbook).chapters.at(ref.chapter).sections.at(ref.section);
}

std::vector<SectionRef> Curriculum::sections() const
{
    std::vector<SectionRef> refs;
    for (std::size_t t = 0; t < textbooks_.size(); ++t) {
        for (std::size_t c = 0; c < textbooks_[t].chapters.size(); ++c) {
            for (std::size_t s = 0; s < textbooks_[t].chapters[c].sections.size(); ++s) {
                refs.push_back(SectionRef{t, c, s});
            }
        }
    }
    return refs;
}

const Sentence* Curriculum::find_sentence(std::string_view id) const
{
    auto loc = locate(id);
    if (!loc) {
        return nullptr;
    }
    return &section(SectionRef{loc->textbook, loc->chapter, loc->section}).sentences[loc->sentence];
}

std::optional<SentenceLocation> Curriculum::locate(std::string_view id) const
{
    auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<SectionRef> Curriculum::resolve(std::string_view textbook,
                                              std::string_view chapter,
                                              std::string_view section) const
{
    for (std::size_t t = 0; t < textbooks_.size(); ++t) {
        if (textbooks_[t].id != textbook) {
            continue;
        }
        const auto& chapters = textbooks_[t].chapters;
        for (std::size_t c = 0; c < chapters.size(); ++c) {
            if (chapters[c].id != chapter) {
                continue;
            }
            const auto& sections = chapters[c].sections;
            for (std::size_t s = 0; s < sections.size(); ++s) {
                if (sections[s].id == section) {
                    return SectionRef{t, c, s};
                }
            }
        }
    }
    return std::nullopt;
}

std::size_t Curriculum::unit_count() const noexcept
{
    std::size_t total = 0;
    for (const auto& tb : textbooks_) {
        for (const auto& ch : tb.chapters) {
            for (const auto& sec : ch.sections) {
                for (const auto& s : sec.sentences) {
                    total += s.units.size();
                }
            }
        }
    }
    return total;
}

Curriculum parse_corpus(std::string_view corpus_json, std::string_view annotations_jsonl)
{
    json root = detail::parse_json(corpus_json, "corpus");

    std::unordered_map<std::string, json> sidecar;
    detail::for_each_jsonl(annotations_jsonl, "annotations", [&](json record, std::size_t line) {
        auto id = detail::require<std::string>(record, "id", "annotations line " + std::to_string(line));
        if (!sidecar.emplace(id, std::move(record)).second) {
            fail(ErrorKind::duplicate_id, "duplicate annotation record for sentence \"" + id + "\"");
        }
    });

    try {
        std::vector<Textbook> textbooks;
        std::size_t merged = 0;
        for (const auto& tj : detail::require_field(root, "textbooks", "corpus")) {
            Textbook tb;
            tb.id = detail::require<std::string>(tj, "id", "textbook");
            tb.title = tj.value("title", std::string{});
            for (const auto& cj : detail::require_field(tj, "chapters", "textbook \"" + tb.id + "\"")) {
                Chapter ch;
                ch.id = detail::require<std::string>(cj, "id", "chapter");
                ch.title = cj.value("title", std::string{});
                for (const auto& sj : detail::require_field(cj, "sections", "chapter \"" + ch.id + "\"")) {
                    Section sec;
                    sec.id = detail::require<std::string>(sj, "id", "section");
                    sec.title = sj.value("title", std::string{});
                    for (auto sent : detail::require_field(sj, "sentences", "section \"" + sec.id + "\"")) {
                        if (auto it = sidecar.find(sent.value("id", std::string{})); it != sidecar.end()) {
                            for (const auto& [key, value] : it->second.items()) {
                                if (key == "units") {
                                    sent.erase("mwes");
                                }
                                sent[key] = value;
                            }
                            ++merged;
                        }
                        sec.sentences.push_back(sentence_from(sent));
                    }
                    if (auto rq = sj.find("review_questions"); rq != sj.end()) {
                        sec.review_question_ids = rq->get<std::vector<std::string>>();
                    }
                    ch.sections.push_back(std::move(sec));
                }
                tb.chapters.push_back(std::move(ch));
            }
            textbooks.push_back(std::move(tb));
        }
        if (merged != sidecar.size()) {
            fail(ErrorKind::annotation, "annotation records reference sentences missing from the corpus");
        }
        return Curriculum(std::move(textbooks));
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, std::string("corpus: ") + e.what());
    }
}

Curriculum load_corpus(const std::filesystem::path& corpus_path,
                       const std::optional<std::filesystem::path>& annotations_path)
{
    auto corpus = read_file(corpus_path);
    std::string annotations;
    if (annotations_path) {
        annotations = read_file(*annotations_path);
    }
    return parse_corpus(corpus, annotations);
}

std::string serialize_corpus(const Curriculum& curriculum)
{
    json tbs = json::array();
    for (const auto& tb : curriculum.textbooks()) {
        json chs = json::array();
        for (const auto& ch : tb.chapters) {
            json secs = json::array();
            for (const auto& sec : ch.sections) {
                json sents = json::array();
                for (const auto& s : sec.sentences) {
                    sents.push_back(sentence_to(s));
                }
                secs.push_back({{"id", sec.id},
                                {"title", sec.title},
                                {"sentences", std::move(sents)},
                                {"review_questions", sec.review_question_ids}});
            }
            chs.push_back({{"id", ch.id}, {"title", ch.title}, {"sections", std::move(secs)}});
        }
        tbs.push_back({{"id", tb.id}, {"title", tb.title}, {"chapters", std::move(chs)}});
    }
    return json{{"textbooks", std::move(tbs)}}.dump();
}

std::uint64_t content_hash(const Curriculum& curriculum)
{
    return fnv1a64(serialize_corpus(curriculum));
}

Sentence first_mention_substitute(const Sentence& sentence, const Curriculum& curriculum)
{
    Sentence out = sentence;
    out.coref_links.clear();

    auto links = sentence.coref_links;
    std::sort(links.begin(), links.end(), [](const auto& a, const auto& b) {
        return a.mention.begin > b.mention.begin;
    });

    for (const auto& link : links) {
        const Sentence* source = nullptr;
        std::string source_id = link.antecedent_sentence;
        UnitSpan span = link.antecedent;
        std::unordered_set<std::string> visited;
        while (true) {
            source = curriculum.find_sentence(source_id);
            if (source == nullptr) {
                fail(ErrorKind::annotation,
                     "dangling coref antecedent \"" + source_id + "\" in sentence \"" + sentence.id + "\"");
            }
            if (span.end > source->units.size() || span.begin >= span.end) {
                fail(ErrorKind::annotation, "coref antecedent span out of range in \"" + source_id + "\"");
            }
            auto key = source_id + "#" + std::to_string(span.begin) + ":" + std::to_string(span.end);
            if (!visited.insert(key).second) {
                break;
            }
            auto next = std::find_if(source->coref_links.begin(), source->coref_links.end(),
                                     [&](const CorefLink& c) { return c.mention == span; });
            if (next == source->coref_links.end()) {
                break;
            }
            source_id = next->antecedent_sentence;
            span = next->antecedent;
        }

        const auto begin = link.mention.begin;
        const auto end = link.mention.end;
        const auto width = span.end - span.begin;
        const CharSpan chars{out.units[begin].source.begin, out.units[end - 1].source.end};

        std::vector<Unit> replacement(source->units.begin() + static_cast<std::ptrdiff_t>(span.begin),
                                      source->units.begin() + static_cast<std::ptrdiff_t>(span.end));
        for (auto& u : replacement) {
            u.source = chars;
        }
        out.units.erase(out.units.begin() + static_cast<std::ptrdiff_t>(begin),
                        out.units.begin() + static_cast<std::ptrdiff_t>(end));
        out.units.insert(out.units.begin() + static_cast<std::ptrdiff_t>(begin), replacement.begin(),
                         replacement.end());

        std::vector<DependencyEdge> edges;
        std::unordered_set<std::size_t> has_head;
        for (const auto& e : out.dependency_edges) {
            DependencyEdge m{remap_index(e.head, begin, end, width), remap_index(e.dependent, begin, end, width),
                             e.relation};
            if (m.head != m.dependent && has_head.insert(m.dependent).second) {
                edges.push_back(std::move(m));
            }
        }
        out.dependency_edges = std::move(edges);
        for (auto& f : out.srl_frames) {
            f.predicate = remap_index(f.predicate, begin, end, width);
            f.argument = UnitSpan{remap_index(f.argument.begin, begin, end, width),
                                  remap_index(f.argument.end - 1, begin, end, width) + 1};
        }
    }
    return out;
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorKind::io, "cannot open \"" + path.string() + "\"");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace eqa
