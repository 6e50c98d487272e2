#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "eqa/features.hpp"

namespace eqa {

struct InferenceOptions {
    std::size_t beam = 5;
    /// Known (textbook, chapter, section); the search then only covers the
    /// snippet, knowledge and alignment.
    std::optional<SectionAnchor> fixed_prefix;
};

struct ScoredStructure {
    AnswerEntailingStructure structure;
    FeatureVector features;
    double score = 0.0;
};

/// Snippet block with first-mention variants chosen greedily: in snippet
/// order, a sentence switches to its variant iff that strictly raises the
/// block's dot product with `weights`.
struct SnippetChoice {
    std::vector<bool> coref_variant;
    std::vector<double> block;
    double score = 0.0;
};

SnippetChoice choose_coref(const Hypothesis& h,
                           SectionRef section,
                           std::span<const std::size_t> snippet,
                           std::span<const double> weights,
                           const Resources& resources);

/// Fills in coreference choices, knowledge selection and the alignment for a
/// fixed (section, snippet) and scores the result.
ScoredStructure complete_structure(const Hypothesis& h,
                                   SectionRef section,
                                   std::vector<std::size_t> snippet,
                                   std::span<const double> weights,
                                   const Resources& resources);

/// Staged beam search: textbook, chapter, section, snippet (grown one
/// sentence at a time up to the configured cap, with the option to stop),
/// then knowledge selection and alignment for every surviving entry.
///
/// Each stage keeps `beam` entries chosen so that the entries kept at width
/// B-1 are a prefix of those kept at width B: entry b is the best candidate
/// not yet taken among the expansions of entries 0..b of the previous stage.
/// Hence widening the beam never lowers the returned score, and a beam at
/// least as large as the number of complete structures is exhaustive.
ScoredStructure best_structure(const Hypothesis& h,
                               std::span<const double> weights,
                               const Resources& resources,
                               const InferenceOptions& options = {});

/// Number of (section, snippet) combinations the search ranges over.
std::size_t count_structures(const Curriculum& curriculum,
                             std::size_t snippet_max,
                             std::optional<SectionRef> prefix = std::nullopt);

}  // namespace eqa
