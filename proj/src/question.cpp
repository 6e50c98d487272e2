#include "eqa/question.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include <nlohmann/json.hpp>

#include "eqa/error.hpp"
#include "json_util.hpp"

namespace eqa {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 7> wh_words{"what", "which", "why", "how", "when", "where", "who"};

std::string collapse_spaces(std::string_view text)
{
    std::string out;
    bool pending = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c)) != 0) {
            pending = !out.empty();
            continue;
        }
        if (pending) {
            out += ' ';
            pending = false;
        }
        out += c;
    }
    return out;
}

std::string strip_question_mark(std::string_view text)
{
    auto s = trim(text);
    while (!s.empty() && s.back() == '?') {
        s.pop_back();
    }
    return trim(s);
}

}  // namespace

std::string_view to_string(QwordClass c) noexcept
{
    switch (c) {
    case QwordClass::what: return "what";
    case QwordClass::which: return "which";
    case QwordClass::why: return "why";
    case QwordClass::how: return "how";
    case QwordClass::when: return "when";
    case QwordClass::where: return "where";
    case QwordClass::who: return "who";
    case QwordClass::other: return "other";
    }
    return "other";
}

std::string_view to_string(QtypeClass c) noexcept
{
    switch (c) {
    case QtypeClass::no_context: return "no_context";
    case QtypeClass::context: return "context";
    case QtypeClass::negation: return "negation";
    }
    return "no_context";
}

void RuleSet::add(std::string pattern, std::string template_text)
{
    RewriteRule rule;
    try {
        rule.compiled = std::regex(pattern, std::regex::ECMAScript | std::regex::icase);
    } catch (const std::regex_error& e) {
        fail(ErrorKind::parse, "rule pattern \"" + pattern + "\" is not a valid regular expression: " + e.what());
    }
    rule.groups = rule.compiled.mark_count();

    bool has_answer = false;
    for (std::size_t i = 0; i < template_text.size(); ++i) {
        if (template_text[i] == '}') {
            fail(ErrorKind::parse, "unbalanced '}' in rule template \"" + template_text + "\"");
        }
        if (template_text[i] != '{') {
            continue;
        }
        auto close = template_text.find('}', i);
        if (close == std::string::npos) {
            fail(ErrorKind::parse, "unterminated placeholder in rule template \"" + template_text + "\"");
        }
        auto name = template_text.substr(i + 1, close - i - 1);
        if (name == "ANSWER") {
            has_answer = true;
        } else if (name.size() == 1 && name[0] >= '1' && name[0] <= '9') {
            if (static_cast<std::size_t>(name[0] - '0') > rule.groups) {
                fail(ErrorKind::parse, "placeholder {" + name + "} exceeds the capture groups of \"" + pattern + "\"");
            }
        } else {
            fail(ErrorKind::parse, "bad placeholder {" + name + "} in rule template \"" + template_text + "\"");
        }
        i = close;
    }
    if (!has_answer) {
        fail(ErrorKind::parse, "rule template \"" + template_text + "\" has no {ANSWER} slot");
    }
    rule.pattern = std::move(pattern);
    rule.template_ = std::move(template_text);
    rules_.push_back(std::move(rule));
}

std::optional<std::string> RuleSet::apply(std::string_view interrogative, std::string_view answer) const
{
    const auto subject = to_lower_ascii(trim(interrogative));
    for (const auto& rule : rules_) {
        std::smatch m;
        if (!std::regex_match(subject, m, rule.compiled)) {
            continue;
        }
        std::string out;
        const auto& t = rule.template_;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (t[i] != '{') {
                out += t[i];
                continue;
            }
            auto close = t.find('}', i);
            auto name = t.substr(i + 1, close - i - 1);
            if (name == "ANSWER") {
                out += answer;
            } else {
                out += m[static_cast<std::size_t>(name[0] - '0')].str();
            }
            i = close;
        }
        return collapse_spaces(out);
    }
    return std::nullopt;
}

RuleSet parse_rules(std::string_view json_text)
{
    auto j = detail::parse_json(json_text, "rules");
    if (!j.is_array()) {
        fail(ErrorKind::parse, "rules: expected a JSON array of {pattern, template}");
    }
    RuleSet rules;
    std::size_t i = 0;
    for (const auto& r : j) {
        auto ctx = "rule " + std::to_string(i++);
        rules.add(detail::require<std::string>(r, "pattern", ctx), detail::require<std::string>(r, "template", ctx));
    }
    return rules;
}

RuleSet load_rules(const std::filesystem::path& path)
{
    return parse_rules(read_file(path));
}

bool detect_negation(std::string_view text, const NegationLexicon& lexicon)
{
    // Typographic apostrophes are folded to ASCII before matching.
    std::string folded;
    folded.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text.substr(i, 3) == "\xE2\x80\x99") {
            folded += '\'';
            i += 2;
        } else {
            folded += text[i];
        }
    }
    for (const auto& unit : tokenize(folded)) {
        for (const auto& word : lexicon.words) {
            if (unit.surface == word) {
                return true;
            }
            if (word.starts_with("n'") && unit.surface.size() > word.size() && unit.surface.ends_with(word)) {
                return true;
            }
        }
    }
    return false;
}

QwordClass classify_qword(const Question& question)
{
    auto units = tokenize(question.text);
    if (units.empty()) {
        return QwordClass::other;
    }
    for (std::size_t i = 0; i < wh_words.size(); ++i) {
        if (units.front().surface == wh_words[i]) {
            return static_cast<QwordClass>(i);
        }
    }
    return QwordClass::other;
}

QtypeClass classify_qtype(const Question& question, const NegationLexicon& lexicon)
{
    if (detect_negation(question.text, lexicon)) {
        return QtypeClass::negation;
    }
    return split_sentences(question.text).size() >= 2 ? QtypeClass::context : QtypeClass::no_context;
}

std::vector<Unit> QuestionProcessor::units_of(std::string_view text) const
{
    return mwes.merge(tokenize(text));
}

std::string QuestionProcessor::hypothesis_text(const Question& question, std::size_t candidate) const
{
    const auto& answer = question.candidates.at(candidate);
    auto sentences = split_sentences(question.text);
    if (!sentences.empty()) {
        std::string context;
        for (std::size_t i = 0; i + 1 < sentences.size(); ++i) {
            context += sentences[i];
            context += ' ';
        }
        if (auto rewritten = rules.apply(sentences.back(), answer)) {
            return to_lower_ascii(collapse_spaces(context + *rewritten));
        }
    }
    return to_lower_ascii(collapse_spaces(strip_question_mark(question.text) + " " + answer));
}

std::vector<Hypothesis> QuestionProcessor::generate_hypotheses(const Question& question) const
{
    const bool negated = detect_negation(question.text, negation);
    const auto qword = static_cast<std::size_t>(classify_qword(question));
    const auto qtype = static_cast<std::size_t>(classify_qtype(question, negation));
    auto question_units = units_of(question.text);

    std::vector<Hypothesis> out;
    out.reserve(question.candidates.size());
    for (std::size_t c = 0; c < question.candidates.size(); ++c) {
        Hypothesis h;
        h.question_id = question.id;
        h.candidate = c;
        h.text = hypothesis_text(question, c);
        h.units = units_of(h.text);
        if (h.units.empty()) {
            fail(ErrorKind::invalid_argument,
                 "question \"" + question.id + "\" candidate " + std::to_string(c) + " yields an empty hypothesis");
        }
        h.question_units = question_units;
        h.answer_units = units_of(question.candidates[c]);
        h.is_negated = negated;
        h.qword_task = qword;
        h.qtype_task = qtype;
        out.push_back(std::move(h));
    }
    return out;
}

void validate_question(const Question& question, const Curriculum* curriculum)
{
    const auto n = question.candidates.size();
    if (n < 2 || n > 4) {
        fail(ErrorKind::invalid_argument,
             "question \"" + question.id + "\" has " + std::to_string(n) + " candidates; expected 2 to 4");
    }
    if (question.gold_index && *question.gold_index >= n) {
        fail(ErrorKind::invalid_argument, "question \"" + question.id + "\" has gold index out of range");
    }
    if (curriculum != nullptr && question.review_anchor) {
        const auto& a = *question.review_anchor;
        if (!curriculum->resolve(a.textbook, a.chapter, a.section)) {
            fail(ErrorKind::unknown_id, "review anchor " + a.textbook + "/" + a.chapter + "/" + a.section
                                            + " of question \"" + question.id + "\" does not resolve");
        }
    }
}

std::vector<Question> parse_questions(std::string_view jsonl)
{
    std::vector<Question> out;
    detail::for_each_jsonl(jsonl, "questions", [&](json j, std::size_t line) {
        auto ctx = "questions line " + std::to_string(line);
        Question q;
        q.id = detail::require<std::string>(j, "id", ctx);
        q.text = detail::require<std::string>(j, "text", ctx);
        q.candidates = detail::require<std::vector<std::string>>(j, "candidates", ctx);
        if (auto g = j.find("gold"); g != j.end() && !g->is_null()) {
            auto v = g->get<long long>();
            if (v < 0) {
                fail(ErrorKind::invalid_argument, ctx + ": negative gold index");
            }
            q.gold_index = static_cast<std::size_t>(v);
        }
        if (auto a = j.find("review_anchor"); a != j.end() && !a->is_null()) {
            q.review_anchor = SectionAnchor{detail::require<std::string>(*a, "textbook", ctx),
                                            detail::require<std::string>(*a, "chapter", ctx),
                                            detail::require<std::string>(*a, "section", ctx)};
        }
        validate_question(q);
        out.push_back(std::move(q));
    });
    return out;
}

std::vector<Question> load_questions(const std::filesystem::path& path)
{
    return parse_questions(read_file(path));
}

std::string serialize_question(const Question& q)
{
    json j{{"id", q.id}, {"text", q.text}, {"candidates", q.candidates}};
    if (q.gold_index) {
        j["gold"] = *q.gold_index;
    }
    if (q.review_anchor) {
        j["review_anchor"] = {{"textbook", q.review_anchor->textbook},
                              {"chapter", q.review_anchor->chapter},
                              {"section", q.review_anchor->section}};
    }
    return j.dump();
}

std::vector<std::vector<Question>> split_dataset(const std::vector<Question>& questions,
                                                 const std::vector<std::size_t>& sizes)
{
    std::size_t total = 0;
    for (auto s : sizes) {
        total += s;
    }
    if (total > questions.size()) {
        fail(ErrorKind::invalid_argument, "split sizes exceed the dataset (" + std::to_string(total) + " > "
                                              + std::to_string(questions.size()) + ")");
    }
    std::vector<std::vector<Question>> parts;
    auto it = questions.begin();
    for (auto s : sizes) {
        parts.emplace_back(it, it + static_cast<std::ptrdiff_t>(s));
        it += static_cast<std::ptrdiff_t>(s);
    }
    return parts;
}

}  // namespace eqa
