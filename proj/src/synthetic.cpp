#include "autocf/synthetic.hpp"

#include <algorithm>
#include <optional>
#include <map>
#include <cmath>
#include <cstdio>
#include <functional>
#include <unordered_set>

#include "autocf/error.hpp"
#include "autocf/evaluate.hpp"
#include "autocf/properties.hpp"
#include "autocf/ranker.hpp"
#include "autocf/rng.hpp"
#include "autocf/symbolic.hpp"

namespace autocf {

namespace {

// ---------------------------------------------------------------------------
// Column generators

enum class Theme { Categorical, Code, Name, Amount, Score, Count, Change, Date };

struct ColumnSpec {
  std::vector<std::string> headers;
  Theme theme;
  std::vector<std::string> values;  // categorical levels / code prefixes
};

const std::vector<ColumnSpec>& column_specs() {
  static const std::vector<ColumnSpec> specs{
      {{"Status", "State"}, Theme::Categorical, {"Open", "Closed", "Pending", "In progress", "On hold"}},
      {{"Priority"}, Theme::Categorical, {"High", "Medium", "Low"}},
      {{"Region", "Area"}, Theme::Categorical, {"North", "South", "East", "West", "Central"}},
      {{"Department", "Team"}, Theme::Categorical, {"Sales", "Finance", "HR", "IT", "Marketing", "Legal"}},
      {{"Category", "Type"}, Theme::Categorical, {"Hardware", "Software", "Service", "Training"}},
      {{"Result"}, Theme::Categorical, {"Pass", "Fail", "Retest"}},
      {{"Code", "SKU", "Ticket", "Project ID"}, Theme::Code, {"AB", "CD", "XZ", "PR"}},
      {{"Owner", "Name", "Contact", "Assignee"}, Theme::Name, {}},
      {{"Cost", "Price", "Amount", "Revenue", "Budget"}, Theme::Amount, {}},
      {{"Score", "Grade", "Progress"}, Theme::Score, {}},
      {{"Quantity", "Units", "Hours", "Stock"}, Theme::Count, {}},
      {{"Change", "Variance", "Profit"}, Theme::Change, {}},
      {{"Due", "Deadline", "Start", "Created", "Shipped"}, Theme::Date, {}},
  };
  return specs;
}

const std::vector<std::string> kFirstNames{"Ana", "Ben", "Chen", "Dara", "Eli", "Femi", "Gita", "Hugo",
                                           "Ines", "Jon", "Kai",  "Lena", "Mo",  "Noor", "Omar", "Pia"};
const std::vector<std::string> kLastNames{"Ito", "Khan", "Lopez", "Meyer", "Novak", "Okafor", "Park", "Quinn"};

CellType theme_type(Theme t) {
  switch (t) {
    case Theme::Categorical:
    case Theme::Code:
    case Theme::Name: return CellType::Text;
    case Theme::Date: return CellType::Date;
    default: return CellType::Numeric;
  }
}

/// Zipf-like weights so categorical columns have a clear head.
std::vector<double> skewed_weights(std::size_t n, Rng& rng) {
  std::vector<double> w;
  const double s = rng.uniform(0.6, 1.4);
  for (std::size_t i = 0; i < n; ++i) w.push_back(1.0 / std::pow(static_cast<double>(i + 1), s));
  return w;
}

std::string format_amount(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return format_number(*parse_number(buf));
}

struct GeneratedColumn {
  std::string header;
  CellType type;
  std::vector<std::string> values;
};

GeneratedColumn generate_column(const ColumnSpec& spec, const std::string& header, std::size_t m, Date today,
                                Rng& rng) {
  GeneratedColumn col{header, theme_type(spec.theme), {}};
  const double blank_rate = rng.coin(0.3) ? rng.uniform(0.05, 0.2) : 0.0;
  switch (spec.theme) {
    case Theme::Categorical: {
      std::vector<std::string> levels = spec.values;
      rng.shuffle(levels);
      levels.resize(std::max<std::size_t>(2, levels.size() - rng.below(2)));
      const auto w = skewed_weights(levels.size(), rng);
      for (std::size_t r = 0; r < m; ++r) col.values.push_back(levels[rng.weighted(w)]);
      break;
    }
    case Theme::Code: {
      std::vector<std::string> prefixes = spec.values;
      rng.shuffle(prefixes);
      prefixes.resize(2 + rng.below(2));
      const auto w = skewed_weights(prefixes.size(), rng);
      const bool suffix = rng.coin(0.4);
      for (std::size_t r = 0; r < m; ++r) {
        std::string v = prefixes[rng.weighted(w)] + "-" + std::to_string(100 + rng.below(900));
        if (suffix) v += rng.coin(0.3) ? "X" : "A";
        col.values.push_back(v);
      }
      break;
    }
    case Theme::Name: {
      const std::size_t pool = 4 + rng.below(kFirstNames.size() - 4);
      const bool full = rng.coin(0.5);
      for (std::size_t r = 0; r < m; ++r) {
        std::string v = kFirstNames[rng.below(pool)];
        if (full) v += " " + kLastNames[rng.below(kLastNames.size())];
        col.values.push_back(v);
      }
      break;
    }
    case Theme::Amount: {
      const double scale = std::pow(10.0, static_cast<double>(2 + rng.below(3)));
      const double mean = scale * rng.uniform(1, 5), sd = mean * rng.uniform(0.2, 0.6);
      const int decimals = rng.coin(0.3) ? 2 : 0;
      for (std::size_t r = 0; r < m; ++r)
        col.values.push_back(format_amount(std::max(0.0, mean + sd * rng.normal()), decimals));
      break;
    }
    case Theme::Score: {
      const double mean = rng.uniform(50, 80), sd = rng.uniform(8, 20);
      for (std::size_t r = 0; r < m; ++r)
        col.values.push_back(format_amount(std::clamp(mean + sd * rng.normal(), 0.0, 100.0), 0));
      break;
    }
    case Theme::Count: {
      const std::size_t hi = 10 + rng.below(90);
      for (std::size_t r = 0; r < m; ++r) col.values.push_back(std::to_string(rng.below(hi + 1)));
      break;
    }
    case Theme::Change: {
      const double sd = std::pow(10.0, static_cast<double>(1 + rng.below(3)));
      const double shift = rng.uniform(-0.5, 0.5) * sd;
      for (std::size_t r = 0; r < m; ++r) col.values.push_back(format_amount(shift + sd * rng.normal(), 0));
      break;
    }
    case Theme::Date: {
      const int spread = 20 + static_cast<int>(rng.below(100));
      const int center = static_cast<int>(rng.below(61)) - 30;
      for (std::size_t r = 0; r < m; ++r) {
        const int offset = center + static_cast<int>(rng.below(static_cast<std::size_t>(2 * spread + 1))) - spread;
        col.values.push_back(format_date(today + std::chrono::days(offset)));
      }
      break;
    }
  }
  for (auto& v : col.values)
    if (blank_rate > 0 && rng.uniform() < blank_rate) v.clear();
  return col;
}

Table assemble(std::vector<GeneratedColumn> cols) {
  std::vector<Column> out;
  for (auto& g : cols) {
    Column c{g.header, g.type, {}};
    for (const auto& v : g.values) c.cells.push_back(make_cell(v, g.type));
    out.push_back(std::move(c));
  }
  return Table(std::move(out));
}

// ---------------------------------------------------------------------------
// Planted rules

struct WeightedLiteral {
  Literal lit;
  double weight;
};

/// The round number a user would type for a statistic.
double round_constant(double v) {
  const auto nice = nice_constants(v);
  return nice.empty() ? v : nice.front();
}

/// Code families ordered by frequency (first two characters).
std::vector<std::string> code_families(const Column& c) {
  std::map<std::string, std::size_t> counts;
  for (const auto& cell : c.cells)
    if (!cell.blank() && cell.value.size() >= 2) ++counts[cell.value.substr(0, 2)];
  std::vector<std::pair<std::string, std::size_t>> v(counts.begin(), counts.end());
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (auto& [f, n] : v) out.push_back(f);
  return out;
}

struct RuleMenu {
  std::vector<WeightedLiteral> singles;
  std::optional<Condition> compound;  // the theme's usual two-literal rule
};

/// Rules a user would plausibly pick from a spreadsheet's preset menus
/// (equals a category, top/bottom 10%, above/below average, a date window,
/// duplicates, blanks), with how often.
RuleMenu rule_menu(const Table& t, std::size_t col, Theme theme, Date today) {
  const Column& c = t.column(col);
  const std::string& h = c.header;
  const ColumnProperties props = extract_properties(t, col, kDefaultPropertyK, today);
  RuleMenu menu;
  auto add = [&](Predicate p, double w) { menu.singles.push_back({Literal{std::move(p), false}, w}); };
  auto either = [](Predicate a, Predicate b) { return Condition{{{Literal{std::move(a), false}}, {Literal{std::move(b), false}}}}; };
  const bool has_blanks = number_property(props, "NumBlanks").value_or(0) > 0;
  const bool has_dups = number_property(props, "NumDuplicates").value_or(0) > 0;
  if (has_blanks) add(Predicate::general(PredKind::Blanks, h), 2);

  switch (c.type) {
    case CellType::Text: {
      const TextVocabulary vocab = text_vocabulary(c, props);
      if (theme == Theme::Categorical) {
        const double head[] = {4, 2, 1, 0.5};
        for (std::size_t i = 0; i < std::min<std::size_t>(4, vocab.values.size()); ++i)
          add(Predicate::text_pred(PredKind::TextEquals, h, vocab.values[i]), head[i]);
        if (vocab.values.size() >= 2)
          menu.compound = either(Predicate::text_pred(PredKind::TextEquals, h, vocab.values[0]),
                                 Predicate::text_pred(PredKind::TextEquals, h, vocab.values[1]));
      } else if (theme == Theme::Code) {
        const auto families = code_families(c);
        const double head[] = {3, 2, 1};
        for (std::size_t i = 0; i < std::min<std::size_t>(3, families.size()); ++i)
          add(Predicate::text_pred(PredKind::TextStartsWith, h, families[i]), head[i]);
        if (has_dups) add(Predicate::general(PredKind::Duplicates, h), 1);
        if (families.size() >= 2)
          menu.compound = either(Predicate::text_pred(PredKind::TextStartsWith, h, families[0]),
                                 Predicate::text_pred(PredKind::TextStartsWith, h, families[1]));
      } else {
        if (has_dups) {
          add(Predicate::general(PredKind::Duplicates, h), 2);
          add(Predicate::general(PredKind::Unique, h), 1);
        }
        if (!vocab.values.empty()) add(Predicate::text_pred(PredKind::TextEquals, h, vocab.values[0]), 1);
        if (!vocab.tokens.empty()) add(Predicate::text_pred(PredKind::TextContains, h, vocab.tokens[0]), 1);
        if (has_dups && has_blanks)
          menu.compound = either(Predicate::general(PredKind::Blanks, h), Predicate::general(PredKind::Duplicates, h));
      }
      break;
    }
    case CellType::Numeric: {
      auto stat = [&](const char* name) { return number_property(props, name); };
      auto cmp = [&](CmpOp op, double v) {
        return Predicate::compare(NumExpr::column(h), op, NumExpr::constant(v));
      };
      const auto p90 = stat("90PercentileValue"), p10 = stat("10PercentileValue"), p75 = stat("75PercentileValue");
      const auto avg = stat("AverageValue");
      if (!p90 || !p10 || !p75 || !avg) break;
      if (theme == Theme::Change) {
        add(cmp(CmpOp::Lt, 0), 5);
        add(cmp(CmpOp::Gt, 0), 1.5);
        add(cmp(CmpOp::Gt, round_constant(*p90)), 1);
        add(cmp(CmpOp::Lt, round_constant(*p10)), 1);
      } else {
        add(cmp(CmpOp::Gt, round_constant(*p90)), 3);  // top 10%
        add(cmp(CmpOp::Gt, *avg), 3);                  // above average
        add(cmp(CmpOp::Lt, round_constant(*p10)), 2);  // bottom 10%
        add(cmp(CmpOp::Lt, *avg), 1.5);                // below average
        add(cmp(CmpOp::Gt, round_constant(*p75)), 1.5);
      }
      menu.compound = either(cmp(CmpOp::Lt, round_constant(*p10)), cmp(CmpOp::Gt, round_constant(*p90)));
      break;
    }
    case CellType::Date: {
      add(Predicate::date_pred(PredKind::InNextWeek, h), 2);
      add(Predicate::date_pred(PredKind::InThisMonth, h), 2);
      add(Predicate::date_pred(PredKind::InLastWeek, h), 1.5);
      add(Predicate::date_pred(PredKind::InLastMonth, h), 1.5);
      add(Predicate::date_pred(PredKind::InNextMonth, h), 1);
      add(Predicate::date_pred(PredKind::InThisWeek, h), 1);
      menu.compound = either(Predicate::date_pred(PredKind::InThisMonth, h), Predicate::date_pred(PredKind::InNextMonth, h));
      break;
    }
  }
  return menu;
}

Condition plant_rule(const RuleMenu& menu, Rng& rng) {
  if (menu.compound && rng.coin(0.15)) return *menu.compound;
  std::vector<double> w;
  for (const auto& m : menu.singles) w.push_back(m.weight);
  return Condition{{{menu.singles[rng.weighted(w)].lit}}};
}

Condition cross_column_rule(const Table& t, std::size_t a, std::size_t b, Rng& rng) {
  const std::string& ha = t.column(a).header;
  const std::string& hb = t.column(b).header;
  if (rng.coin(0.3)) return single(Predicate::compare(NumExpr::column(ha), CmpOp::Gt, NumExpr::column(hb)));
  std::vector<double> diffs;
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    const Cell& x = t.cell(a, r);
    const Cell& y = t.cell(b, r);
    if (x.ctype == CellType::Numeric && y.ctype == CellType::Numeric && !x.blank() && !y.blank())
      diffs.push_back(std::get<double>(x.parsed) - std::get<double>(y.parsed));
  }
  double k = 0;
  if (!diffs.empty() && rng.coin(0.6)) {
    std::sort(diffs.begin(), diffs.end());
    k = round_constant(percentile(diffs, rng.uniform(0.5, 0.85)));
  }
  return single(Predicate::compare(NumExpr::sub(NumExpr::column(ha), NumExpr::column(hb)), CmpOp::Gt,
                                   NumExpr::constant(k)));
}

// ---------------------------------------------------------------------------
// Formats

Rgb css(const char* name) { return *css_color_by_name(name); }

Format pick_format(const Condition& c, Rng& rng) {
  const Literal& lit = c.clauses.front().front();
  const Predicate& p = lit.pred;
  enum { Bad, Good, Neutral } mood = Neutral;
  if (p.kind == PredKind::Blanks || p.kind == PredKind::DateBefore || p.kind == PredKind::Duplicates) mood = Bad;
  if (p.kind == PredKind::Compare) mood = (p.op == CmpOp::Gt || p.op == CmpOp::Ge) ? Good : Bad;
  Format f;
  const double r = rng.uniform();
  switch (mood) {
    case Bad:
      if (r < 0.5) f.fill = css("lightcoral");
      else if (r < 0.75) f.fill = css("red");
      else if (r < 0.9) f.fill = css("mistyrose");
      else f.font = css("red");
      break;
    case Good:
      if (r < 0.5) f.fill = css("lightgreen");
      else if (r < 0.75) f.fill = css("green");
      else if (r < 0.9) f.fill = css("palegreen");
      else f.font = css("darkgreen");
      break;
    case Neutral:
      if (r < 0.4) f.fill = css("yellow");
      else if (r < 0.6) f.fill = css("lightblue");
      else if (r < 0.8) f.fill = css("gold");
      else f.fill = css("lightyellow");
      break;
  }
  if (rng.coin(0.2)) f.bold = true;
  return f;
}

// ---------------------------------------------------------------------------

struct TableDraft {
  Table table;
  std::size_t target;
  Theme target_theme;
  std::vector<std::size_t> numeric_pair;  // for cross-column rules
};

std::string unique_header(const std::vector<std::string>& names, std::set<std::string>& used, Rng& rng) {
  for (int tries = 0; tries < 8; ++tries) {
    const std::string& h = rng.pick(names);
    if (used.insert(fold_case(h)).second) return h;
  }
  for (int i = 2;; ++i) {
    std::string h = names.front() + " " + std::to_string(i);
    if (used.insert(fold_case(h)).second) return h;
  }
}

TableDraft draft_table(const SyntheticOptions& opts, bool cross, Rng& rng) {
  const auto& specs = column_specs();
  const std::size_t m = opts.min_rows + rng.below(opts.max_rows - opts.min_rows + 1);
  std::set<std::string> used;
  std::vector<GeneratedColumn> cols;
  std::vector<Theme> themes;
  TableDraft d;

  if (cross) {
    // a related pair such as Budget vs Cost
    static const std::vector<std::pair<std::string, std::string>> kPairs{
        {"Budget", "Cost"}, {"Target", "Sales"}, {"Planned", "Actual"}, {"Limit", "Spent"}};
    const auto& [ha, hb] = rng.pick(kPairs);
    used.insert(fold_case(ha));
    used.insert(fold_case(hb));
    GeneratedColumn b = generate_column(specs[8], hb, m, opts.today, rng);
    GeneratedColumn a{ha, CellType::Numeric, {}};
    for (const auto& v : b.values) {
      const double base = v.empty() ? 1000 : *parse_number(v);
      a.values.push_back(format_amount(std::max(0.0, base * rng.uniform(0.7, 1.5)), 0));
    }
    cols.push_back(std::move(a));
    cols.push_back(std::move(b));
    themes = {Theme::Amount, Theme::Amount};
  }

  const std::size_t extra = (cross ? 1 : 2) + rng.below(3);
  for (std::size_t i = 0; i < extra; ++i) {
    const ColumnSpec& spec = rng.pick(specs);
    const std::string h = unique_header(spec.headers, used, rng);
    cols.push_back(generate_column(spec, h, m, opts.today, rng));
    themes.push_back(spec.theme);
  }
  std::vector<std::size_t> order(cols.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<GeneratedColumn> shuffled;
  std::vector<Theme> shuffled_themes;
  std::vector<std::size_t> position(cols.size());
  for (std::size_t i : order) {
    position[i] = shuffled.size();
    shuffled.push_back(cols[i]);
    shuffled_themes.push_back(themes[i]);
  }
  if (cross) d.numeric_pair = {position[0], position[1]};
  d.table = assemble(std::move(shuffled));
  d.target = rng.below(d.table.n_cols());
  d.target_theme = shuffled_themes[d.target];
  return d;
}

}  // namespace

bool recoverable_at_depth2(const Table& table, std::size_t target, const ExecutionVector& mask, Date today,
                           const std::vector<Predicate>& extra) {
  const EvalContext ctx{.today = today, .target = target};
  std::vector<Predicate> preds =
      enumerate_predicates(extract_properties(table, target, kDefaultPropertyK, today), table, target);
  preds.insert(preds.end(), extra.begin(), extra.end());
  std::vector<ExecutionVector> masks;
  std::unordered_set<std::string> seen;
  for (const auto& p : preds) {
    if (!seen.insert(print(p)).second) continue;
    const ExecutionVector v = predicate_mask(p, table, ctx);
    masks.push_back(v);
    if (negatable(p)) masks.push_back(~v);
  }
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (masks[i] == mask) return true;
    for (std::size_t j = i + 1; j < masks.size(); ++j)
      if ((masks[i] & masks[j]) == mask || (masks[i] | masks[j]) == mask) return true;
  }
  return false;
}

SyntheticCorpus generate_synthetic_corpus(const SyntheticOptions& opts) {
  if (opts.n_tasks == 0) throw Error("n_tasks must be at least 1");
  if (opts.min_rows < 2 || opts.max_rows < opts.min_rows) throw Error("invalid row range");
  Rng rng(opts.seed);
  SyntheticCorpus out;
  for (std::size_t i = 0; i < opts.n_tasks; ++i) {
    char id[64];
    std::snprintf(id, sizeof id, "syn%llu-%04zu", static_cast<unsigned long long>(opts.seed), i);
    const bool cross = rng.uniform() < opts.cross_column_rate;
    bool done = false;
    for (std::size_t attempt = 0; attempt < opts.max_attempts && !done; ++attempt) {
      TableDraft d = draft_table(opts, cross, rng);
      Condition truth;
      std::vector<Predicate> extra;
      if (cross) {
        // the highlighted column is often another one, such as an id
        if (rng.coin()) d.target = d.numeric_pair[0];
        truth = cross_column_rule(d.table, d.numeric_pair[0], d.numeric_pair[1], rng);
        extra.push_back(truth.clauses[0][0].pred);
      } else {
        const RuleMenu menu = rule_menu(d.table, d.target, d.target_theme, opts.today);
        if (menu.singles.empty()) continue;
        truth = plant_rule(menu, rng);
      }
      truth = normalize(truth);
      const EvalContext ctx{.today = opts.today, .target = d.target};
      const ExecutionVector mask = execute(truth, d.table, ctx);
      const double frac = static_cast<double>(mask.count()) / static_cast<double>(d.table.n_rows());
      if (frac < opts.min_highlight || frac > opts.max_highlight) continue;
      if (!recoverable_at_depth2(d.table, d.target, mask, opts.today, extra)) continue;

      BenchmarkTask task;
      task.id = id;
      task.table = std::move(d.table);
      task.target = d.target;
      task.today = opts.today;
      task.rule = Rule{truth, pick_format(truth, rng)};
      out.records.push_back(make_record(task.id, task.table, *task.rule, "synthetic:seed=" + std::to_string(opts.seed)));
      out.tasks.push_back(std::move(task));
      done = true;
    }
    if (!done) out.warnings.push_back(std::string(id) + ": no acceptable rule after " +
                                      std::to_string(opts.max_attempts) + " attempts; skipped");
  }
  return out;
}

}  // namespace autocf
