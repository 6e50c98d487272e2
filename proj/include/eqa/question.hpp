#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "eqa/corpus.hpp"
#include "eqa/text.hpp"

namespace eqa {

/// Known (textbook, chapter, section) of a review question.
struct SectionAnchor {
    std::string textbook;
    std::string chapter;
    std::string section;

    bool operator==(const SectionAnchor&) const = default;
};

struct Question {
    std::string id;
    std::string text;
    std::vector<std::string> candidates;
    std::optional<std::size_t> gold_index;
    std::optional<SectionAnchor> review_anchor;

    bool operator==(const Question&) const = default;
};

enum class QwordClass : std::uint8_t { what, which, why, how, when, where, who, other };
enum class QtypeClass : std::uint8_t { no_context, context, negation };

inline constexpr std::size_t qword_task_count = 8;
inline constexpr std::size_t qtype_task_count = 3;

std::string_view to_string(QwordClass c) noexcept;
std::string_view to_string(QtypeClass c) noexcept;

/// Declarative statement formed from a question and one candidate.
struct Hypothesis {
    std::string question_id;
    std::size_t candidate = 0;
    std::string text;
    std::vector<Unit> units;
    /// Units of the question alone and of the candidate alone, used by the
    /// text-question / text-answer match features.
    std::vector<Unit> question_units;
    std::vector<Unit> answer_units;
    bool is_negated = false;
    std::size_t qword_task = 0;
    std::size_t qtype_task = 0;
};

/// One rewriting rule. `pattern` is an ECMAScript regular expression matched
/// case-insensitively against the whole interrogative sentence; `template_`
/// may reference capture groups as {1}..{9} and the candidate as {ANSWER}.
struct RewriteRule {
    std::string pattern;
    std::string template_;
    std::regex compiled;
    std::size_t groups = 0;
};

class RuleSet {
  public:
    RuleSet() = default;
    /// Throws `ErrorKind::parse` on a malformed pattern or placeholder.
    void add(std::string pattern, std::string template_text);

    [[nodiscard]] const std::vector<RewriteRule>& rules() const noexcept { return rules_; }

    /// Rewrites one interrogative sentence; nullopt when no rule matches.
    [[nodiscard]] std::optional<std::string> apply(std::string_view interrogative, std::string_view answer) const;

  private:
    std::vector<RewriteRule> rules_;
};

RuleSet parse_rules(std::string_view json_text);
RuleSet load_rules(const std::filesystem::path& path);

struct NegationLexicon {
    std::vector<std::string> words{"not", "n't", "never", "no", "none", "except", "least"};

    static NegationLexicon minimal() { return NegationLexicon{{"not", "n't"}}; }
};

/// Token-level, case-insensitive lexicon match. An entry starting with "n'"
/// also matches as a clitic suffix ("isn't").
bool detect_negation(std::string_view text, const NegationLexicon& lexicon = {});

QwordClass classify_qword(const Question& question);
QtypeClass classify_qtype(const Question& question, const NegationLexicon& lexicon = {});

/// Everything needed to turn questions into hypotheses.
struct QuestionProcessor {
    RuleSet rules;
    MweLexicon mwes;
    NegationLexicon negation;

    /// Units of free text: fallback tokenization plus lexicon MWE merging.
    [[nodiscard]] std::vector<Unit> units_of(std::string_view text) const;

    /// Hypothesis text for one candidate. Context sentences are kept; the
    /// final sentence is rewritten by the first matching rule, otherwise the
    /// question (terminal '?' stripped) is concatenated with the candidate.
    [[nodiscard]] std::string hypothesis_text(const Question& question, std::size_t candidate) const;

    [[nodiscard]] std::vector<Hypothesis> generate_hypotheses(const Question& question) const;
};

/// Checks the candidate count, gold index and (when a curriculum is given)
/// that review anchors resolve.
void validate_question(const Question& question, const Curriculum* curriculum = nullptr);

std::vector<Question> parse_questions(std::string_view jsonl);
std::vector<Question> load_questions(const std::filesystem::path& path);
std::string serialize_question(const Question& question);

/// Consecutive slices of `questions` with the given sizes (e.g. 1500/500/500).
std::vector<std::vector<Question>> split_dataset(const std::vector<Question>& questions,
                                                 const std::vector<std::size_t>& sizes);

}  // namespace eqa
