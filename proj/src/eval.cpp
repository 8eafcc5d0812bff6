#include "autocf/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "autocf/evaluate.hpp"

namespace autocf {

ConditionMatch match_conditions(const Condition& learned, const Condition& truth, const Table& table,
                                const EvalContext& ctx, std::vector<std::string>* warnings) {
  ConditionMatch m;
  const Condition a = normalize(learned), b = normalize(truth);
  m.exact = a == b;
  m.sketch = m.exact || sketch(a) == sketch(b);
  try {
    m.execution = execute(a, table, ctx) == execute(b, table, ctx);
  } catch (const Error& e) {
    if (warnings) warnings->push_back(std::string("execution match failed: ") + e.what());
  }
  return m;
}

std::vector<FormatIdentifier> identifiers_of(const Format& f) {
  std::vector<FormatIdentifier> out;
  if (f.fill) out.push_back(FormatIdentifier::Fill);
  if (f.font) out.push_back(FormatIdentifier::FontColor);
  if (f.bold || f.italic || f.underline) out.push_back(FormatIdentifier::FontStyle);
  return out;
}

namespace {

bool same_color_name(const std::optional<Rgb>& learned, const std::optional<Rgb>& truth) {
  if (!truth) return true;
  return learned && nearest_web_color(*learned).rgb == nearest_web_color(*truth).rgb;
}

}  // namespace

FormatMatch match_formats(const Format& learned, const Format& truth) {
  return {same_color_name(learned.fill, truth.fill) && same_color_name(learned.font, truth.font),
          identifiers_of(learned) == identifiers_of(truth)};
}

MatchResult combine(const ConditionMatch& c, const FormatMatch& f) {
  return {c.exact, c.sketch, c.execution, f.color, f.property, c.execution && f.color};
}

std::size_t token_edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

Embedder bag_of_tokens_embedder() {
  return {"bag-of-tokens-cosine", [](const Condition& a, const Condition& b) {
            std::map<std::string, double> va, vb;
            for (const auto& t : tokenize_printed(normalize(a))) va[t] += 1;
            for (const auto& t : tokenize_printed(normalize(b))) vb[t] += 1;
            double dot = 0, na = 0, nb = 0;
            for (const auto& [t, x] : va) {
              na += x * x;
              if (auto it = vb.find(t); it != vb.end()) dot += x * it->second;
            }
            for (const auto& [t, y] : vb) nb += y * y;
            return na == 0 || nb == 0 ? 0.0 : dot / std::sqrt(na * nb);
          }};
}

std::optional<DiversityReport> diversity(const std::vector<Condition>& conditions,
                                         const std::vector<ExecutionVector>& masks, const Embedder& embedder) {
  const std::size_t n = conditions.size();
  if (n < 2) return std::nullopt;
  std::vector<std::vector<std::string>> tokens;
  for (const auto& c : conditions) tokens.push_back(tokenize_printed(normalize(c)));
  DiversityReport r;
  r.embedder = embedder.name;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      ++pairs;
      r.edit_distance += static_cast<double>(token_edit_distance(tokens[i], tokens[j]));
      if (i < masks.size() && j < masks.size() && masks[i].size() > 0)
        r.hamming += static_cast<double>(masks[i].hamming(masks[j])) / static_cast<double>(masks[i].size());
      r.embedding_similarity += embedder.similarity(conditions[i], conditions[j]);
    }
  const double p = static_cast<double>(pairs);
  r.edit_distance /= p;
  r.hamming /= p;
  r.embedding_similarity /= p;
  return r;
}

double coverage(const std::vector<ExecutionVector>& masks) {
  if (masks.empty() || masks.front().size() == 0) return 0;
  ExecutionVector u(masks.front().size());
  for (const auto& m : masks) u |= m;
  return static_cast<double>(u.count()) / static_cast<double>(u.size());
}

// ---------------------------------------------------------------------------

std::optional<std::size_t> TaskReport::first_match(bool MatchResult::*field) const {
  for (std::size_t i = 0; i < matches.size(); ++i)
    if (matches[i].*field) return i;
  return std::nullopt;
}

double SuiteReport::match_rate(bool MatchResult::*field, std::size_t k) const {
  if (tasks.empty()) return 0;
  std::size_t hit = 0;
  for (const auto& t : tasks)
    if (auto r = t.first_match(field); r && *r < k) ++hit;
  return static_cast<double>(hit) / static_cast<double>(tasks.size());
}

double SuiteReport::completeness(std::size_t k) const {
  if (tasks.empty()) return 0;
  std::size_t n = 0;
  for (const auto& t : tasks) n += t.n_suggestions >= k;
  return static_cast<double>(n) / static_cast<double>(tasks.size());
}

double SuiteReport::mean_coverage(std::size_t k) const {
  if (tasks.empty() || k == 0) return 0;
  double sum = 0;
  for (const auto& t : tasks)
    if (!t.coverage.empty()) sum += t.coverage[std::min(k, t.coverage.size()) - 1];
  return sum / static_cast<double>(tasks.size());
}

std::size_t SuiteReport::diversity_violations() const {
  return static_cast<std::size_t>(std::count_if(tasks.begin(), tasks.end(), [](const TaskReport& t) { return !t.diverse_prefix; }));
}

std::size_t SuiteReport::errors() const {
  return static_cast<std::size_t>(std::count_if(tasks.begin(), tasks.end(), [](const TaskReport& t) { return t.error.has_value(); }));
}

namespace {

TaskReport run_task(const BenchmarkTask& task, const Engine& engine, const SuiteConfig& cfg, std::size_t max_k) {
  TaskReport r;
  r.id = task.id;
  r.kind = task.rule ? "rule" : "manual";
  r.n_rows = task.table.n_rows();
  try {
    std::unique_ptr<GeneratorClient> client = cfg.client_factory ? cfg.client_factory() : nullptr;
    const SuggestResult res = engine.suggest(task.table, task.target, task.today, client.get(), task.id);
    r.n_suggestions = res.suggestions.size();
    r.class_count = res.class_count;
    r.llm_used = res.llm_used;
    r.warnings = res.warnings;
    const EvalContext ctx{.today = task.today, .target = task.target};
    const ExecutionVector truth_mask = task.truth_mask();
    const Format truth_format = task.truth_format();
    std::vector<Condition> conditions;
    std::vector<ExecutionVector> masks;
    for (const auto& s : res.suggestions) {
      ConditionMatch cm;
      if (task.rule) {
        cm = match_conditions(s.condition, task.rule->condition, task.table, ctx, &r.warnings);
      } else {
        cm.execution = s.mask == truth_mask;
      }
      r.matches.push_back(combine(cm, match_formats(s.format, truth_format)));
      r.complexity.push_back(complexity(s.condition));
      conditions.push_back(s.condition);
      masks.push_back(s.mask);
      r.coverage.push_back(coverage(masks));
    }
    r.diversity = diversity(conditions, masks, cfg.embedder);
    const std::size_t prefix = std::min({max_k, res.class_count, masks.size()});
    std::set<std::string> seen;
    for (std::size_t i = 0; i < prefix; ++i)
      if (!seen.insert(masks[i].to_bitstring()).second) r.diverse_prefix = false;
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

}  // namespace

SuiteReport run_suite(const std::vector<BenchmarkTask>& tasks, const Engine& engine, const SuiteConfig& cfg) {
  SuiteReport report;
  report.ks = cfg.ks;
  std::sort(report.ks.begin(), report.ks.end());
  report.embedder = cfg.embedder.name;
  report.tasks.resize(tasks.size());
  const std::size_t max_k = std::max(engine.config().k, report.ks.empty() ? std::size_t{0} : report.ks.back());
  std::size_t threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(1, tasks.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) report.tasks[i] = run_task(tasks[i], engine, cfg, max_k);
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return report;
}

namespace {

struct Field {
  const char* name;
  bool MatchResult::*member;
};
constexpr Field kFields[] = {
    {"exact", &MatchResult::exact},         {"sketch", &MatchResult::sketch},
    {"execution", &MatchResult::execution}, {"color", &MatchResult::color},
    {"property", &MatchResult::property},   {"end_to_end", &MatchResult::end_to_end},
};

nlohmann::json diversity_json(const std::optional<DiversityReport>& d) {
  if (!d) return nullptr;
  return {{"edit_distance", d->edit_distance},
          {"hamming", d->hamming},
          {"embedding_similarity", d->embedding_similarity},
          {"embedder", d->embedder}};
}

}  // namespace

nlohmann::json report_to_json(const SuiteReport& r) {
  nlohmann::json topk = nlohmann::json::array();
  for (std::size_t k : r.ks) {
    nlohmann::json row{{"k", k}, {"completeness", r.completeness(k)}, {"coverage", r.mean_coverage(k)}};
    for (const auto& f : kFields) row[f.name] = r.match_rate(f.member, k);
    topk.push_back(row);
  }
  // complexity of the top suggestion, as histograms
  std::map<std::size_t, std::size_t> tokens, depth;
  double div_edit = 0, div_ham = 0, div_emb = 0;
  std::size_t div_n = 0;
  nlohmann::json tasks = nlohmann::json::array();
  for (const auto& t : r.tasks) {
    if (!t.complexity.empty()) {
      ++tokens[t.complexity[0].token_count];
      ++depth[t.complexity[0].ast_depth];
    }
    if (t.diversity) {
      ++div_n;
      div_edit += t.diversity->edit_distance;
      div_ham += t.diversity->hamming;
      div_emb += t.diversity->embedding_similarity;
    }
    nlohmann::json first = nlohmann::json::object();
    for (const auto& f : kFields) {
      const auto m = t.first_match(f.member);
      first[f.name] = m ? nlohmann::json(*m + 1) : nlohmann::json(nullptr);
    }
    nlohmann::json jt{{"id", t.id},
                      {"kind", t.kind},
                      {"rows", t.n_rows},
                      {"suggestions", t.n_suggestions},
                      {"classes", t.class_count},
                      {"first_match_rank", first},
                      {"coverage", t.coverage},
                      {"diversity", diversity_json(t.diversity)},
                      {"diverse_prefix", t.diverse_prefix},
                      {"llm_used", t.llm_used}};
    if (t.error) jt["error"] = *t.error;
    if (!t.warnings.empty()) jt["warnings"] = t.warnings;
    tasks.push_back(std::move(jt));
  }
  auto hist = [](const std::map<std::size_t, std::size_t>& h) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [v, n] : h) out[std::to_string(v)] = n;
    return out;
  };
  nlohmann::json div = nullptr;
  if (div_n) {
    const double n = static_cast<double>(div_n);
    div = {{"edit_distance", div_edit / n},
           {"hamming", div_ham / n},
           {"embedding_similarity", div_emb / n},
           {"embedder", r.embedder},
           {"tasks", div_n}};
  }
  return {{"schema_version", SuiteReport::kSchemaVersion},
          {"task_count", r.tasks.size()},
          {"errors", r.errors()},
          {"diversity_violations", r.diversity_violations()},
          {"top_k", topk},
          {"complexity", {{"token_count", hist(tokens)}, {"ast_depth", hist(depth)}}},
          {"diversity", div},
          {"tasks", tasks}};
}

std::string report_to_csv(const SuiteReport& r) {
  std::ostringstream out;
  out << "k";
  for (const auto& f : kFields) out << ',' << f.name;
  out << ",completeness,coverage\n";
  for (std::size_t k : r.ks) {
    out << k;
    for (const auto& f : kFields) out << ',' << r.match_rate(f.member, k);
    out << ',' << r.completeness(k) << ',' << r.mean_coverage(k) << '\n';
  }
  return out.str();
}

}  // namespace autocf
