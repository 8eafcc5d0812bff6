#pragma once

// Predicate enumeration over column properties and ranker-guided beam search
// over DNF combinations of the enumerated literals.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "autocf/condition.hpp"
#include "autocf/execution_vector.hpp"
#include "autocf/properties.hpp"
#include "autocf/ranker.hpp"
#include "autocf/table.hpp"

namespace autocf {

enum class Origin { Symbolic, Neural };

/// Reusable building block for the search. A body whose literals have an
/// empty column (e.g. NOT(Blanks())) has an open column slot that is filled
/// with the target column on instantiation.
struct Component {
  Condition body;
  Origin origin = Origin::Neural;

  bool operator==(const Component&) const = default;
};

/// Fills open column slots with the target header; nullopt when the result
/// does not type-check on the table.
std::optional<Condition> instantiate(const Component& c, const Table& table, std::size_t target);

/// Replaces empty column references with the given header.
Condition bind_target(const Condition& c, const std::string& header);

/// Candidate predicates for column `col` derived from its properties.
std::vector<Predicate> enumerate_predicates(const ColumnProperties& props, const Table& table, std::size_t col);

/// Extra predicates built from generator-supplied terms: comparisons between
/// and against boosted numeric columns and constants, and text/date tests
/// with boosted constants. Terms are case-folded column names and canonical
/// constants.
std::vector<Predicate> enumerate_boosted_predicates(const std::set<std::string>& terms, const Table& table,
                                                    std::size_t target);

/// Negation is offered only where it reads naturally: Blanks and text tests.
bool negatable(const Predicate& p);

bool uses_boosted_term(const Condition& c, const std::set<std::string>& terms);

inline constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();

struct BeamConfig {
  std::size_t beam_width = 10;
  std::size_t max_depth = 5;
  double boost_fraction = 0.10;
  std::size_t max_candidates = 200;
};

/// Score plus the boost reward, computed on the magnitude so negative logits
/// also move up.
double apply_boost(double score, double fraction);

struct Candidate {
  Condition condition;  // normalized
  double score = 0;     // ranker logit
  double boosted_score = 0;
  bool boosted = false;
  bool neural = false;
  ExecutionVector mask;
};

double score_node(const Condition& cond, const Table& table, std::size_t col, const RankerModel& ranker,
                  Date today);

/// Levelized beam search. Candidates come back ordered by boosted score,
/// ties by normalized text.
std::vector<Candidate> beam_synthesize(const std::vector<Predicate>& predicates,
                                       const std::vector<Component>& neural_components, const Table& table,
                                       std::size_t col, const BeamConfig& cfg, const RankerModel& ranker,
                                       const std::set<std::string>& boosted_terms, Date today);

// ---------------------------------------------------------------------------
// Ranker training

struct TrainingTask {
  Table table;
  std::size_t target = 0;
  Condition truth;
  Date today{};
};

struct TrainOptions {
  std::size_t negatives_per_positive = 8;
  std::uint64_t seed = 1;
  /// Retraining rounds that add the search's best wrong candidates per task
  /// as negatives.
  std::size_t hard_negative_rounds = 0;
  std::size_t hard_negatives_per_task = 10;
  MlpConfig mlp;
};

inline constexpr std::size_t kMinTrainingExamples = 100;

/// Sub-conditions used as positive examples: the whole condition, each
/// clause, each literal and each literal pair within a clause.
std::vector<Condition> sub_conditions(const Condition& c);

struct TrainingSet {
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  std::vector<double> weight;
};

TrainingSet build_training_set(const std::vector<TrainingTask>& tasks, const TrainOptions& opts);

/// Throws Error when the corpus is empty, negatives_per_positive is 0, or the
/// corpus yields fewer than kMinTrainingExamples examples.
RankerModel train_ranker(const std::vector<TrainingTask>& tasks, const TrainOptions& opts);

}  // namespace autocf
