#pragma once

// Seeded synthetic benchmark: small themed tables with a planted rule that
// the depth-2 enumerator provably recovers.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "autocf/corpus.hpp"
#include "autocf/table.hpp"

namespace autocf {

struct SyntheticOptions {
  std::uint64_t seed = 7;
  std::size_t n_tasks = 200;
  std::size_t min_rows = 20;
  std::size_t max_rows = 60;
  /// Share of tasks whose rule compares two numeric columns. Those rules are
  /// outside target-column enumeration, so evaluation corpora keep this at 0.
  double cross_column_rate = 0;
  double min_highlight = 0.10;
  double max_highlight = 0.60;
  std::size_t max_attempts = 200;
  Date today = std::chrono::sys_days{std::chrono::year{2024} / std::chrono::May / 15};
};

struct SyntheticCorpus {
  std::vector<BenchmarkTask> tasks;
  std::vector<CorpusRecord> records;  // one per task, same id
  std::vector<std::string> warnings;
};

SyntheticCorpus generate_synthetic_corpus(const SyntheticOptions& opts);

/// Exhaustive oracle: true when some condition of at most two literals from
/// the target column's enumerated predicates (and their negations), combined
/// with AND or OR, executes to `mask`. `extra` adds predicates to the pool.
bool recoverable_at_depth2(const Table& table, std::size_t target, const ExecutionVector& mask, Date today,
                           const std::vector<Predicate>& extra = {});

}  // namespace autocf
