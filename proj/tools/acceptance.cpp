// Acceptance checks: one PASS/FAIL line per criterion, then a summary line.
// Exit status is 0 once every criterion has been evaluated (the lines carry
// the verdicts); pass --strict to exit 1 when any criterion fails.

#include <chrono>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <algorithm>
#include <set>
#include <sstream>

#include "autocf/engine.hpp"
#include "autocf/eval.hpp"
#include "autocf/evaluate.hpp"
#include "autocf/synthetic.hpp"
#include "test_support.hpp"

namespace {

using namespace autocf;
using Clock = std::chrono::steady_clock;

// pinned tolerances
constexpr std::size_t kOracleInstances = 1000;
constexpr double kOracleSeconds = 10;
constexpr std::size_t kNormalizeInstances = 1000;
constexpr double kRecallTarget = 0.90;
constexpr double kRecallSeconds = 60;
constexpr std::size_t kRecallK = 5;
constexpr std::size_t kLawCases = 500;
constexpr double kLatencySeconds = 1.0;
const Date kToday = std::chrono::sys_days{std::chrono::year{2024} / std::chrono::May / 15};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = true;
  std::string detail;
};

Verdict check(bool ok, const std::string& detail) { return {ok, detail}; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(3);
  ss << v;
  return ss.str();
}

// ---------------------------------------------------------------------------

Verdict dsl_oracle() {
  testing::Random rng(101);
  const auto t0 = Clock::now();
  std::size_t agree = 0;
  for (std::size_t i = 0; i < kOracleInstances; ++i) {
    const Table t = testing::random_table(rng, 8);
    const Condition c = testing::random_condition(rng, 3, 2);
    const ExecutionVector got = execute(c, t, EvalContext{.today = kToday, .target = 0});
    if (got == ExecutionVector::from_bits(testing::oracle::execute(t, c))) ++agree;
  }
  const double secs = seconds_since(t0);
  return check(agree == kOracleInstances && secs < kOracleSeconds,
               std::to_string(agree) + "/" + std::to_string(kOracleInstances) + " agree in " + fmt(secs) + " s");
}

Verdict normalization() {
  testing::Random rng(103);
  std::size_t sound = 0;
  for (std::size_t i = 0; i < kNormalizeInstances; ++i) {
    const Table t = testing::random_table(rng, 8);
    const Condition c = testing::random_condition(rng, 3, 2);
    const EvalContext ctx{.today = kToday, .target = 0};
    if (execute(c, t, ctx) == execute(normalize(c), t, ctx)) ++sound;
  }
  const Table t = testing::make_table({"c"}, {CellType::Text}, {{"A"}, {"B"}});
  const bool commutes = match_conditions(parse_condition("TextEquals(\"A\") AND TextEquals(\"B\")"),
                                         parse_condition("TextEquals(\"B\") AND TextEquals(\"A\")"), t,
                                         EvalContext{.today = kToday, .target = 0})
                            .exact;
  return check(sound == kNormalizeInstances && commutes,
               std::to_string(sound) + "/" + std::to_string(kNormalizeInstances) + " sound, commutativity example " +
                   (commutes ? "exact" : "not exact"));
}

struct SuiteRun {
  SuiteReport report;
  double seconds = 0;
};

const SuiteRun& synthetic_suite(const Engine& engine) {
  static const SuiteRun run = [&] {
    SyntheticOptions o;
    o.seed = 7;
    o.n_tasks = 200;
    const auto corpus = generate_synthetic_corpus(o);
    const Engine with_corpus(engine.ranker(), corpus.records, engine.config());
    SuiteConfig cfg;
    cfg.ks = {1, 3, kRecallK};
    const auto t0 = Clock::now();
    SuiteRun r;
    r.report = run_suite(corpus.tasks, with_corpus, cfg);
    r.seconds = seconds_since(t0);
    return r;
  }();
  return run;
}

Verdict diversity_guarantee(const Engine& engine) {
  const auto& run = synthetic_suite(engine);
  std::size_t checked = 0;
  for (const auto& t : run.report.tasks) checked += t.class_count >= kRecallK;
  return check(run.report.diversity_violations() == 0 && run.report.errors() == 0,
               std::to_string(run.report.diversity_violations()) + " violations over " +
                   std::to_string(run.report.tasks.size()) + " tasks (" + std::to_string(checked) +
                   " with at least " + std::to_string(kRecallK) + " classes)");
}

Verdict synthetic_recall(const Engine& engine) {
  const auto& run = synthetic_suite(engine);
  const double recall = run.report.match_rate(&MatchResult::execution, kRecallK);
  return check(recall >= kRecallTarget && run.seconds < kRecallSeconds,
               "execution recall@5 " + fmt(recall) + " (target " + fmt(kRecallTarget) + ") in " + fmt(run.seconds) + " s");
}

Verdict boost_reproduction(const Engine& engine, const std::string& fixtures) {
  const Table table = parse_table(read_file(fixtures + "/projects.csv"));
  const std::size_t target = resolve_target(table, "Project ID").index;
  const Condition wanted = normalize(parse_condition("[@Budget]-[@Cost]>1000"));
  auto contains = [&](const SuggestResult& r) {
    for (const auto& s : r.suggestions)
      if (normalize(s.condition) == wanted) return true;
    return false;
  };
  EngineConfig cfg = engine.config();
  cfg.k = 5;
  cfg.beam.beam_width = 10;
  const Engine e(engine.ranker(), {}, cfg);
  ReplayClient replay(fixtures + "/budget_cost_transcript.jsonl");
  const SuggestResult with = e.suggest(table, target, kToday, &replay);
  const SuggestResult without = e.suggest(table, target, kToday, nullptr);
  return check(with.llm_used && contains(with) && !contains(without),
               std::string("with transcript: ") + (contains(with) ? "in top-5" : "absent") +
                   ", without: " + (contains(without) ? "in top-5" : "absent"));
}

Verdict format_rules() {
  std::vector<std::string> failures;
  const Rgb red = *css_color_by_name("red");
  // weighted average: one sheet {bold} (weight 2) vs three corpus records without bold
  {
    Format bold;
    bold.bold = true;
    Format fill;
    fill.fill = red;
    const Format f = select_format({{bold}, {fill, fill, fill}});
    // bold: 2/5 = 0.4, fill: 3/5 = 0.6
    if (f.bold || f.fill != red) failures.push_back("0.4 threshold");
    const Format g = select_format({{bold}, {fill, fill}});
    // bold: 2/4 = 0.5 is not above one half
    if (g.bold) failures.push_back("0.5 threshold");
  }
  if (nearest_web_color(*parse_hex("#FF0000")).name != "red" || nearest_web_color(*parse_hex("#FF0011")).name != "red")
    failures.push_back("red bucket");
  std::size_t names = 0;
  for (const auto& c : css_colors()) {
    ++names;
    if (nearest_web_color(c.rgb).rgb != c.rgb || css_color_by_name(c.name) != c.rgb) failures.push_back(std::string(c.name));
  }
  if (names != 147) failures.push_back("147 names");
  // idempotence over random sheets and fills
  testing::Random rng(107);
  for (int i = 0; i < 300; ++i) {
    std::vector<std::vector<std::string>> rows(6, {"x"});
    Table t = testing::make_table({"c"}, {CellType::Text}, rows);
    for (std::size_t r = 0; r < 6; ++r)
      if (rng.coin(0.7))
        t.mutable_column(0).cells[r].format.fill =
            Rgb{static_cast<std::uint8_t>(rng.below(256)), static_cast<std::uint8_t>(rng.below(256)), static_cast<std::uint8_t>(rng.below(256))};
    Format f;
    f.fill = Rgb{static_cast<std::uint8_t>(rng.below(256)), static_cast<std::uint8_t>(rng.below(256)), static_cast<std::uint8_t>(rng.below(256))};
    const Format once = ground_format(f, t);
    if (ground_format(once, t) != once) {
      failures.push_back("idempotence");
      break;
    }
  }
  // solid green grounded in a sheet of light fills
  {
    Table t = testing::make_table({"c"}, {CellType::Text}, {{"a"}, {"b"}, {"c"}, {"d"}});
    const std::vector<std::string> light{"#FFFFE0", "#E0FFFF", "#FFE4E1", "#F0FFF0"};
    for (std::size_t r = 0; r < light.size(); ++r) t.mutable_column(0).cells[r].format.fill = parse_hex(light[r]);
    Format green;
    green.fill = parse_hex("#008000");
    const Format g = ground_format(green, t);
    if (!g.fill || nearest_web_color(*g.fill).name != nearest_web_color(*parse_hex("#ABEDA7")).name)
      failures.push_back("light green grounding");
  }
  std::string detail = failures.empty() ? "threshold, colour buckets, 147 names, idempotence, light green" : "failed:";
  for (const auto& f : failures) detail += " " + f;
  return check(failures.empty(), detail);
}

Verdict manual_filter() {
  const std::size_t m = 12;
  auto count_task = [&](std::size_t c) {
    std::vector<std::vector<std::string>> rows(m, {"v"});
    Table t = testing::make_table({"c"}, {CellType::Text}, rows);
    for (std::size_t r = 0; r < c; ++r) t.mutable_column(0).cells[r].format.fill = Rgb{255, 255, 0};
    return make_manual_task(t, 0).has_value();
  };
  const bool ok = !count_task(5) && count_task(6) && count_task(m - 1) && !count_task(m);
  return check(ok, "c=5 " + std::string(count_task(5) ? "accepted" : "rejected") + ", c=6 " +
                       (count_task(6) ? "accepted" : "rejected") + ", c=m-1 " + (count_task(m - 1) ? "accepted" : "rejected") +
                       ", c=m " + (count_task(m) ? "accepted" : "rejected"));
}

// Independent Levenshtein for the metric checks.
std::size_t edit_oracle(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i)
    for (std::size_t j = 0; j <= b.size(); ++j)
      d[i][j] = i == 0 || j == 0 ? i + j
                                 : std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
  return d[a.size()][b.size()];
}

Verdict metric_laws() {
  testing::Random rng(109);
  std::size_t bad_topk = 0, bad_cov = 0, bad_exact = 0, bad_edit = 0;
  for (std::size_t i = 0; i < kLawCases; ++i) {
    SuiteReport r;
    for (std::size_t t = 0, n = 1 + rng.below(5); t < n; ++t) {
      TaskReport tr;
      tr.n_suggestions = rng.below(7);
      for (std::size_t s = 0; s < tr.n_suggestions; ++s) {
        MatchResult mr;
        mr.execution = rng.coin(0.3);
        tr.matches.push_back(mr);
      }
      r.tasks.push_back(tr);
    }
    for (std::size_t k = 1; k < 7; ++k)
      if (r.match_rate(&MatchResult::execution, k) > r.match_rate(&MatchResult::execution, k + 1)) ++bad_topk;

    const std::size_t m = 1 + rng.below(10);
    std::vector<ExecutionVector> masks;
    double prev = 0;
    for (int s = 0; s < 5; ++s) {
      std::vector<bool> bits(m);
      for (std::size_t b = 0; b < m; ++b) bits[b] = rng.coin(0.3);
      masks.push_back(ExecutionVector::from_bits(bits));
      const double c = coverage(masks);
      if (c < prev) ++bad_cov;
      prev = c;
    }

    const Table t = testing::random_table(rng, 8);
    const Condition a = testing::random_condition(rng, 2, 2);
    Condition b = a;
    std::reverse(b.clauses.begin(), b.clauses.end());
    for (const Condition& other : {b, testing::random_condition(rng, 2, 2)}) {
      const auto cm = match_conditions(a, other, t, EvalContext{.today = kToday, .target = 0});
      if (cm.exact && !(cm.sketch && cm.execution)) ++bad_exact;
    }

    const auto ta = tokenize_printed(normalize(a));
    const auto tb = tokenize_printed(normalize(testing::random_condition(rng, 2, 2)));
    const auto tc = tokenize_printed(normalize(testing::random_condition(rng, 2, 2)));
    const std::size_t ab = token_edit_distance(ta, tb);
    if (ab != edit_oracle(ta, tb) || token_edit_distance(ta, ta) != 0 || ab != token_edit_distance(tb, ta) ||
        token_edit_distance(ta, tc) > ab + token_edit_distance(tb, tc))
      ++bad_edit;
  }
  return check(bad_topk + bad_cov + bad_exact + bad_edit == 0,
               std::to_string(kLawCases) + " cases each; violations: top-k " + std::to_string(bad_topk) + ", coverage " +
                   std::to_string(bad_cov) + ", exact=>sketch " + std::to_string(bad_exact) + ", edit metric " +
                   std::to_string(bad_edit));
}

Verdict determinism(const Engine& engine, const std::string& fixtures) {
  const Table table = parse_table(read_file(fixtures + "/projects.csv"));
  bool same_suggest = true;
  for (std::size_t col = 0; col < table.n_cols(); ++col) {
    const Engine other(RankerModel::from_json(engine.ranker().to_json()), {}, engine.config());
    const auto a = result_to_json(engine.suggest(table, col, kToday)).dump();
    const auto b = result_to_json(other.suggest(table, col, kToday)).dump();
    same_suggest = same_suggest && a == b;
  }
  SyntheticOptions o;
  o.seed = 3;
  o.n_tasks = 40;
  o.cross_column_rate = 0.1;
  std::vector<TrainingTask> tasks;
  for (auto& t : generate_synthetic_corpus(o).tasks) tasks.push_back({t.table, t.target, t.rule->condition, t.today});
  TrainOptions opts;
  opts.seed = 11;
  opts.mlp.epochs = 5;
  const std::string h1 = train_ranker(tasks, opts).hash();
  const std::string h2 = train_ranker(tasks, opts).hash();
  return check(same_suggest && h1 == h2, std::string("suggest output ") + (same_suggest ? "identical" : "differs") +
                                             ", model hashes " + (h1 == h2 ? "identical" : "differ"));
}

Table wide_table() {
  testing::Random rng(113);
  static const std::vector<std::string> kRegion{"North", "South", "East", "West"};
  static const std::vector<std::string> kStatus{"Open", "Closed", "Pending", "On hold"};
  static const std::vector<std::string> kNames{"Ana", "Ben", "Chloe", "Dev", "Eli", "Fay", "Gus", "Hana"};
  std::vector<std::vector<std::string>> rows;
  for (std::size_t r = 0; r < 200; ++r) {
    const Date due = kToday + std::chrono::days(static_cast<int>(rng.below(120)) - 60);
    const Date start = kToday - std::chrono::days(static_cast<int>(rng.below(400)));
    rows.push_back({"ID-" + std::to_string(1000 + r), rng.pick(kNames), rng.pick(kRegion), rng.pick(kStatus),
                    rng.coin(0.05) ? "" : std::to_string(100 + rng.below(9000)), std::to_string(50 + rng.below(5000)),
                    std::to_string(rng.below(300)), std::to_string(rng.below(101)), format_date(due), format_date(start)});
  }
  return testing::make_table({"ID", "Owner", "Region", "Status", "Amount", "Cost", "Units", "Score", "Due", "Start"},
                             {CellType::Text, CellType::Text, CellType::Text, CellType::Text, CellType::Numeric,
                              CellType::Numeric, CellType::Numeric, CellType::Numeric, CellType::Date, CellType::Date},
                             rows);
}

Verdict latency(const Engine& engine) {
  const Table t = wide_table();
  double worst = 0;
  std::string worst_col;
  for (const char* col : {"ID", "Region", "Amount", "Due"}) {
    const auto t0 = Clock::now();
    engine.suggest(t, resolve_target(t, col).index, kToday);
    const double s = seconds_since(t0);
    if (s > worst) {
      worst = s;
      worst_col = col;
    }
  }
  return check(worst < kLatencySeconds, "slowest column " + worst_col + " took " + fmt(worst) + " s on 200x10");
}

}  // namespace

int main(int argc, char** argv) {
  bool strict = false;
  std::string fixtures = AUTOCF_FIXTURE_DIR;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--strict") == 0) strict = true;
    if (std::strcmp(argv[i], "--fixtures") == 0 && i + 1 < argc) fixtures = argv[++i];
  }
  const Engine engine(RankerModel::load_default(), {});

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"dsl-oracle-equivalence", [] { return dsl_oracle(); }},
      {"normalization-soundness", [] { return normalization(); }},
      {"round-robin-diversity", [&] { return diversity_guarantee(engine); }},
      {"synthetic-recall", [&] { return synthetic_recall(engine); }},
      {"neurosymbolic-boost", [&] { return boost_reproduction(engine, fixtures); }},
      {"format-rules", [] { return format_rules(); }},
      {"manual-task-filter", [] { return manual_filter(); }},
      {"metric-laws", [] { return metric_laws(); }},
      {"determinism", [&] { return determinism(engine, fixtures); }},
      {"symbolic-latency", [&] { return latency(engine); }},
  };
  std::size_t passed = 0;
  for (const auto& [name, run] : criteria) {
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    passed += v.pass;
    std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << std::endl;
  }
  std::cout << "acceptance: " << passed << "/" << criteria.size() << " criteria passed" << std::endl;
  return strict && passed != criteria.size() ? 1 : 0;
}
