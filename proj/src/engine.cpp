#include "autocf/engine.hpp"

namespace autocf {

nlohmann::json suggestion_to_json(const Suggestion& s) {
  nlohmann::json sources = nlohmann::json::array();
  for (Source src : s.sources) sources.push_back(std::string(to_string(src)));
  return nlohmann::json{
      {"rule_text", print(s.condition)},
      {"rule_ast", to_json(s.condition)},
      {"score", s.score},
      {"class_id", s.class_id},
      {"highlight_mask", s.mask.to_base64()},
      {"highlight_count", s.mask.count()},
      {"format", format_to_json(s.format)},
      {"format_description", describe(s.format)},
      {"sources", sources},
  };
}

nlohmann::json result_to_json(const SuggestResult& r) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& s : r.suggestions) list.push_back(suggestion_to_json(s));
  return nlohmann::json{{"suggestions", list},
                        {"warnings", r.warnings},
                        {"candidate_count", r.candidate_count},
                        {"class_count", r.class_count},
                        {"llm_used", r.llm_used}};
}

Engine::Engine(RankerModel ranker, std::vector<CorpusRecord> corpus, EngineConfig cfg)
    : ranker_(std::move(ranker)), corpus_(std::move(corpus)), cfg_(std::move(cfg)) {}

SuggestResult Engine::suggest(const Table& table, std::size_t target, Date today, GeneratorClient* client,
                              const std::string& exclude_id) const {
  SuggestOptions opts;
  opts.exclude_id = exclude_id;
  return suggest(table, target, today, client, opts);
}

SuggestResult Engine::suggest(const Table& table, std::size_t target, Date today, GeneratorClient* client,
                              const SuggestOptions& opts) const {
  const std::size_t k = opts.k.value_or(cfg_.k);
  const std::uint64_t seed = opts.seed.value_or(cfg_.seed);
  const std::string& exclude_id = opts.exclude_id;
  if (target >= table.n_cols()) throw ResolutionError("target column index out of range");
  SuggestResult out;
  const ColumnProperties props = extract_properties(table, target, cfg_.property_k, today);
  const std::vector<Predicate> preds = enumerate_predicates(props, table, target);

  std::optional<NeuralResult> neural;
  if (client) {
    try {
      neural = run_neural_generator(table, target, props, *client, seed);
      out.llm_used = true;
      for (const auto& w : neural->response.warnings) out.warnings.push_back(w);
    } catch (const Error& e) {
      out.warnings.push_back(std::string("generator unavailable, using symbolic suggestions only: ") + e.what());
    }
  }

  std::vector<ScoredCondition> symbolic, neural_list, neurosymbolic;
  for (auto& c : beam_synthesize(preds, {}, table, target, cfg_.beam, ranker_, {}, today))
    symbolic.push_back({std::move(c.condition), c.score});

  if (neural) {
    for (const auto& c : neural->conditions) neural_list.push_back({c, score_node(c, table, target, ranker_, today)});
    const auto& terms = neural->decomposition.boosted_terms;
    std::vector<Predicate> boosted_preds = preds;
    for (auto& p : enumerate_boosted_predicates(terms, table, target)) boosted_preds.push_back(std::move(p));
    for (auto& c : beam_synthesize(boosted_preds, neural->decomposition.components, table, target, cfg_.beam,
                                   ranker_, terms, today))
      neurosymbolic.push_back({std::move(c.condition), c.boosted_score});
  }

  const auto pool = pool_candidates(symbolic, neural_list, neurosymbolic);
  out.candidate_count = pool.size();
  const EvalContext ctx{.today = today, .target = target};
  Clustering clusters = cluster_by_execution(pool, table, ctx);
  out.class_count = clusters.classes.size();
  for (auto& w : clusters.warnings) out.warnings.push_back(std::move(w));

  for (auto& r : rank_round_robin(clusters.classes, k)) {
    Suggestion s;
    s.format = learn_format(corpus_, table, r.condition, cfg_.format, exclude_id);
    s.condition = std::move(r.condition);
    s.score = r.score;
    s.class_id = r.class_id;
    s.mask = std::move(r.vector);
    s.sources = std::move(r.sources);
    out.suggestions.push_back(std::move(s));
  }
  return out;
}

}  // namespace autocf
