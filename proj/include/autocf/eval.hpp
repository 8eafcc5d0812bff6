#pragma once

// Benchmark metrics (condition and format matches, diversity, coverage,
// completeness, complexity) and the suite runner behind `eval`.

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "autocf/corpus.hpp"
#include "autocf/engine.hpp"

namespace autocf {

struct ConditionMatch {
  bool exact = false;
  bool sketch = false;
  bool execution = false;
};

/// Exact: equal normalized forms. Sketch: equal sketches. Execution: equal
/// row masks on `table`; an execution failure makes it false and appends a
/// warning when `warnings` is given.
ConditionMatch match_conditions(const Condition& learned, const Condition& truth, const Table& table,
                                const EvalContext& ctx, std::vector<std::string>* warnings = nullptr);

struct FormatMatch {
  bool color = false;
  bool property = false;
};

/// Identifier families compared by the property match.
enum class FormatIdentifier { Fill, FontColor, FontStyle };
std::vector<FormatIdentifier> identifiers_of(const Format& f);

FormatMatch match_formats(const Format& learned, const Format& truth);

struct MatchResult {
  bool exact = false;
  bool sketch = false;
  bool execution = false;
  bool color = false;
  bool property = false;
  bool end_to_end = false;
};

MatchResult combine(const ConditionMatch& c, const FormatMatch& f);

/// Levenshtein distance over token sequences.
std::size_t token_edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b);

/// Similarity of two conditions in some embedding space.
struct Embedder {
  std::string name;
  std::function<double(const Condition&, const Condition&)> similarity;
};

/// Cosine similarity of bag-of-token count vectors of the printed forms.
Embedder bag_of_tokens_embedder();

struct DiversityReport {
  double edit_distance = 0;       // mean pairwise token edit distance
  double hamming = 0;             // mean pairwise Hamming distance / rows
  double embedding_similarity = 0;
  std::string embedder;
};

/// Absent for fewer than two suggestions.
std::optional<DiversityReport> diversity(const std::vector<Condition>& conditions,
                                         const std::vector<ExecutionVector>& masks, const Embedder& embedder);

/// Share of rows highlighted by at least one mask; 0 for an empty table.
double coverage(const std::vector<ExecutionVector>& masks);

// ---------------------------------------------------------------------------

struct SuiteConfig {
  std::vector<std::size_t> ks{1, 3, 5};
  std::size_t threads = 0;  // 0 = hardware concurrency
  /// Builds a generator client per task; empty runs symbolic-only.
  std::function<std::unique_ptr<GeneratorClient>()> client_factory;
  Embedder embedder = bag_of_tokens_embedder();
};

struct TaskReport {
  std::string id;
  std::string kind;  // "rule" or "manual"
  std::size_t n_rows = 0;
  std::size_t n_suggestions = 0;
  std::size_t class_count = 0;
  /// Per suggestion, in rank order.
  std::vector<MatchResult> matches;
  std::vector<Complexity> complexity;
  /// coverage[j] = coverage of the first j + 1 suggestions.
  std::vector<double> coverage;
  std::optional<DiversityReport> diversity;
  /// The first min(max k, classes) suggestions have distinct masks.
  bool diverse_prefix = true;
  bool llm_used = false;
  std::optional<std::string> error;
  std::vector<std::string> warnings;

  /// Rank (0-based) of the first suggestion satisfying `field`.
  std::optional<std::size_t> first_match(bool MatchResult::*field) const;
};

struct SuiteReport {
  static constexpr int kSchemaVersion = 1;

  std::vector<std::size_t> ks;
  std::string embedder;
  std::vector<TaskReport> tasks;

  /// Share of tasks with a match among the first k suggestions.
  double match_rate(bool MatchResult::*field, std::size_t k) const;
  /// Share of tasks with at least k suggestions.
  double completeness(std::size_t k) const;
  /// Mean coverage of the first k suggestions (fewer when fewer exist).
  double mean_coverage(std::size_t k) const;
  std::size_t diversity_violations() const;
  std::size_t errors() const;
};

/// Runs the engine on every task (in parallel; results are in task order
/// and independent of scheduling). Task-level failures are recorded.
SuiteReport run_suite(const std::vector<BenchmarkTask>& tasks, const Engine& engine, const SuiteConfig& cfg = {});

nlohmann::json report_to_json(const SuiteReport& r);
/// One row per k with every match rate, completeness and coverage.
std::string report_to_csv(const SuiteReport& r);

}  // namespace autocf
