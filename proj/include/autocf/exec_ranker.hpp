#pragma once

// Pools candidates from the generators, clusters them by what they highlight
// and interleaves the clusters so the first suggestions differ in execution.

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "autocf/condition.hpp"
#include "autocf/evaluate.hpp"
#include "autocf/execution_vector.hpp"
#include "autocf/table.hpp"

namespace autocf {

enum class Source { Symbolic, Neural, NeuroSymbolic };
std::string_view to_string(Source s);

struct ScoredCondition {
  Condition condition;
  double score = 0;
};

struct PooledCandidate {
  Condition condition;  // normalized
  double score = 0;
  std::set<Source> sources;
};

/// Concatenates the three lists; candidates with the same normal form merge,
/// keeping the larger score and every source. First-appearance order.
std::vector<PooledCandidate> pool_candidates(const std::vector<ScoredCondition>& symbolic,
                                             const std::vector<ScoredCondition>& neural,
                                             const std::vector<ScoredCondition>& neurosymbolic);

struct EquivalenceClass {
  std::vector<PooledCandidate> members;  // descending score, ties by printed form
  ExecutionVector vector;
  double cluster_score = 0;  // mean member score
};

struct Clustering {
  std::vector<EquivalenceClass> classes;  // descending cluster_score, then popcount, then bitstring
  std::vector<std::string> warnings;      // candidates that failed to execute
};

Clustering cluster_by_execution(const std::vector<PooledCandidate>& pool, const Table& table,
                                const EvalContext& ctx);

struct RankedSuggestion {
  Condition condition;
  double score = 0;
  std::size_t class_id = 0;  // index into the clustering's classes
  ExecutionVector vector;
  std::set<Source> sources;
};

/// Pass p emits the (p+1)-th member of every class in class order; stops
/// after k emissions.
std::vector<RankedSuggestion> rank_round_robin(const std::vector<EquivalenceClass>& classes, std::size_t k);

}  // namespace autocf
