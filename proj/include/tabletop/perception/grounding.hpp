#pragma once

#include <string>
#include <vector>

#include "tabletop/perception/detection.hpp"
#include "tabletop/sim/registry.hpp"

namespace tabletop::perception {

/// Candidates must score strictly above this to match.
inline constexpr double kMatchThreshold = 0.5;

/// Lowercase, split on non-alphanumerics, drop determiners/quantifiers and
/// strip a plural "s". "a" survives because letter labels use it.
std::vector<std::string> normalize_tokens(const std::string& text);

/// Dice overlap of the two normalized token sets, in [0,1].
double overlap_score(const std::string& query, const std::string& label);

/// Query rewrites from equivalent phrases ("iron clip" -> "metal clip") and
/// hypernyms ("fruit" -> "apple", ...). The query itself comes first.
std::vector<std::string> expand_query(const std::string& query, const sim::SynonymTable& synonyms);

/// Best score of any expansion of `query` against `label`.
double match_score(const std::string& query, const std::string& label, const sim::SynonymTable& synonyms);

/// Best-matching detection. Ties go to higher confidence, then the
/// lexicographically smallest label, then the box with the smallest (u, v).
/// Throws PreconditionError for an empty query and NotFoundError when the list
/// is empty or nothing clears the threshold.
Detection resolve_label(const std::vector<Detection>& detections, const std::string& query, const sim::SynonymTable& synonyms);

/// Every detection above the threshold, best first (same ordering as resolve_label).
std::vector<Detection> resolve_all(const std::vector<Detection>& detections, const std::string& query, const sim::SynonymTable& synonyms);

}  // namespace tabletop::perception
