#pragma once

// End-to-end suggestion pipeline: profile, generate (symbolic, neural,
// neuro-symbolic), pool, cluster, rank and attach formats.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "autocf/corpus.hpp"
#include "autocf/exec_ranker.hpp"
#include "autocf/format_learner.hpp"
#include "autocf/llm.hpp"
#include "autocf/ranker.hpp"
#include "autocf/symbolic.hpp"

namespace autocf {

struct EngineConfig {
  BeamConfig beam;
  std::size_t k = 5;
  std::size_t property_k = kDefaultPropertyK;
  std::uint64_t seed = 1;  // prompt sampling
  FormatLearnerConfig format;
};

struct Suggestion {
  Condition condition;
  double score = 0;
  std::size_t class_id = 0;
  ExecutionVector mask;
  Format format;
  std::set<Source> sources;
};

struct SuggestResult {
  std::vector<Suggestion> suggestions;
  std::vector<std::string> warnings;
  std::size_t candidate_count = 0;  // pooled candidates
  std::size_t class_count = 0;
  bool llm_used = false;
};

nlohmann::json suggestion_to_json(const Suggestion& s);
nlohmann::json result_to_json(const SuggestResult& r);

/// Per-call overrides of the engine configuration.
struct SuggestOptions {
  std::optional<std::size_t> k;
  std::optional<std::uint64_t> seed;
  std::string exclude_id;
};

class Engine {
 public:
  Engine(RankerModel ranker, std::vector<CorpusRecord> corpus, EngineConfig cfg = {});

  /// Without a client (or when it fails) only symbolic candidates are used.
  /// `exclude_id` hides one corpus record from format retrieval.
  SuggestResult suggest(const Table& table, std::size_t target, Date today, GeneratorClient* client = nullptr,
                        const std::string& exclude_id = {}) const;
  SuggestResult suggest(const Table& table, std::size_t target, Date today, GeneratorClient* client,
                        const SuggestOptions& opts) const;

  const RankerModel& ranker() const noexcept { return ranker_; }
  const EngineConfig& config() const noexcept { return cfg_; }
  EngineConfig& config() noexcept { return cfg_; }
  const std::vector<CorpusRecord>& corpus() const noexcept { return corpus_; }

 private:
  RankerModel ranker_;
  std::vector<CorpusRecord> corpus_;
  EngineConfig cfg_;
};

}  // namespace autocf
