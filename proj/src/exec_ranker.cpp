#include "autocf/exec_ranker.hpp"

#include <algorithm>
#include <unordered_map>

#include "autocf/error.hpp"

namespace autocf {

std::string_view to_string(Source s) {
  switch (s) {
    case Source::Symbolic: return "symbolic";
    case Source::Neural: return "neural";
    case Source::NeuroSymbolic: return "neurosymbolic";
  }
  return "symbolic";
}

std::vector<PooledCandidate> pool_candidates(const std::vector<ScoredCondition>& symbolic,
                                             const std::vector<ScoredCondition>& neural,
                                             const std::vector<ScoredCondition>& neurosymbolic) {
  std::vector<PooledCandidate> pool;
  std::unordered_map<std::string, std::size_t> index;
  auto add = [&](const std::vector<ScoredCondition>& list, Source source) {
    for (const auto& sc : list) {
      Condition n = normalize(sc.condition);
      std::string key = print(n);
      auto [it, fresh] = index.emplace(std::move(key), pool.size());
      if (fresh) {
        pool.push_back(PooledCandidate{std::move(n), sc.score, {source}});
        continue;
      }
      PooledCandidate& p = pool[it->second];
      p.score = std::max(p.score, sc.score);
      p.sources.insert(source);
    }
  };
  add(symbolic, Source::Symbolic);
  add(neural, Source::Neural);
  add(neurosymbolic, Source::NeuroSymbolic);
  return pool;
}

Clustering cluster_by_execution(const std::vector<PooledCandidate>& pool, const Table& table,
                                const EvalContext& ctx) {
  Clustering out;
  std::unordered_map<ExecutionVector, std::size_t, ExecutionVectorHash> index;
  for (const auto& cand : pool) {
    ExecutionVector v;
    try {
      v = execute(cand.condition, table, ctx);
    } catch (const Error& e) {
      out.warnings.push_back("dropped " + print(cand.condition) + ": " + e.what());
      continue;
    }
    auto [it, fresh] = index.emplace(v, out.classes.size());
    if (fresh) out.classes.push_back(EquivalenceClass{{}, std::move(v), 0});
    out.classes[it->second].members.push_back(cand);
  }

  for (auto& cls : out.classes) {
    std::vector<std::pair<std::string, PooledCandidate>> keyed;
    for (auto& m : cls.members) keyed.emplace_back(print(m.condition), std::move(m));
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
      if (a.second.score != b.second.score) return a.second.score > b.second.score;
      return a.first < b.first;
    });
    cls.members.clear();
    double sum = 0;
    for (auto& [key, m] : keyed) {
      sum += m.score;
      cls.members.push_back(std::move(m));
    }
    cls.cluster_score = sum / static_cast<double>(cls.members.size());
  }

  std::vector<std::pair<std::string, EquivalenceClass>> keyed;
  for (auto& cls : out.classes) keyed.emplace_back(cls.vector.to_bitstring(), std::move(cls));
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    if (a.second.cluster_score != b.second.cluster_score) return a.second.cluster_score > b.second.cluster_score;
    const std::size_t pa = a.second.vector.count(), pb = b.second.vector.count();
    if (pa != pb) return pa > pb;
    return a.first < b.first;
  });
  out.classes.clear();
  for (auto& [key, cls] : keyed) out.classes.push_back(std::move(cls));
  return out;
}

std::vector<RankedSuggestion> rank_round_robin(const std::vector<EquivalenceClass>& classes, std::size_t k) {
  std::vector<RankedSuggestion> out;
  for (std::size_t pass = 0; out.size() < k; ++pass) {
    bool any = false;
    for (std::size_t c = 0; c < classes.size() && out.size() < k; ++c) {
      if (pass >= classes[c].members.size()) continue;
      any = true;
      const PooledCandidate& m = classes[c].members[pass];
      out.push_back(RankedSuggestion{m.condition, m.score, c, classes[c].vector, m.sources});
    }
    if (!any) break;
  }
  return out;
}

}  // namespace autocf
