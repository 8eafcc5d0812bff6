#pragma once

// Suggests a format for a condition from the current sheet and similar
// corpus records, then adapts its shade to the sheet.

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "autocf/condition.hpp"
#include "autocf/corpus.hpp"
#include "autocf/table.hpp"

namespace autocf {

struct SimilarityWeights {
  double header = 0.4;
  double formula = 0.1;
  double predicate = 0.3;
  double constant = 0.2;
};

struct RetrievalConfig {
  std::size_t lambda_n = 50;  // at most this many records
  double lambda_t = 0.3;      // stop below this similarity
};

/// |a ∩ b| / |a ∪ b|, with two empty sets counting as full agreement.
double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

double similarity(const CorpusRecord& record, const Table& table, const Condition& cond, const SimilarityWeights& w);

struct Retrieved {
  const CorpusRecord* record;
  double similarity;
};

/// Descending similarity (ties by id), cut at lambda_n records or the first
/// record below lambda_t. Records whose id equals `exclude_id` are skipped.
std::vector<Retrieved> retrieve_similar(const std::vector<CorpusRecord>& corpus, const Table& table,
                                        const Condition& cond, const SimilarityWeights& w,
                                        const RetrievalConfig& cfg, const std::string& exclude_id = {});

struct FormatCandidateSet {
  std::vector<Format> sheet;      // f_e, weight 2 each
  std::vector<Format> retrieved;  // f_r, weight 1 each
};

inline constexpr double kSheetWeight = 2;
inline constexpr double kRetrievedWeight = 1;

/// Light yellow fill, used when there is nothing to learn from.
Format fallback_format();

/// Keeps identifiers whose weighted presence exceeds one half; colors are
/// bucketed by nearest CSS name and the heaviest bucket's color is emitted.
Format select_format(const FormatCandidateSet& candidates);

/// Distinct non-empty formats used in the sheet.
std::vector<Format> sheet_formats(const Table& table);

inline constexpr double kShadeShare = 0.75;
inline constexpr double kLightShade = 0.65, kLightTarget = 0.8;
inline constexpr double kDarkShade = 0.35, kDarkTarget = 0.25;

/// Moves the fill to the sheet's prevailing light or dark shade, keeping hue
/// and saturation. Idempotent.
Format ground_format(const Format& fmt, const Table& table);

struct FormatLearnerConfig {
  SimilarityWeights weights;
  RetrievalConfig retrieval;
  bool use_sheet = true;
  bool use_corpus = true;
  bool ground = true;
};

Format learn_format(const std::vector<CorpusRecord>& corpus, const Table& table, const Condition& cond,
                    const FormatLearnerConfig& cfg = {}, const std::string& exclude_id = {});

}  // namespace autocf
