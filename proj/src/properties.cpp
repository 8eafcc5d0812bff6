#include "autocf/properties.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "autocf/evaluate.hpp"

namespace autocf {

std::string_view to_string(TextShape s) {
  switch (s) {
    case TextShape::Categorical: return "categorical";
    case TextShape::FreeText: return "free_text";
    case TextShape::Neither: return "neither";
  }
  return "neither";
}

double percentile(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

RankedList rank_values(const std::vector<std::string>& values) {
  RankedList out;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& raw : values) {
    std::string v = trim(raw);
    if (v.empty()) continue;
    auto [it, inserted] = index.emplace(fold_case(v), out.size());
    if (inserted)
      out.push_back({std::move(v), 1});
    else
      ++out[it->second].count;
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.count > b.count; });
  return out;
}

namespace {

std::size_t token_count(std::string_view s) {
  std::istringstream in{std::string(s)};
  std::size_t n = 0;
  for (std::string tok; in >> tok;) ++n;
  return n;
}

RankedList head(RankedList list, std::size_t k) {
  if (list.size() > k) list.resize(k);
  return list;
}

void numeric_properties(const Column& column, ColumnProperties& out) {
  std::vector<double> xs;
  for (const auto& cell : column.cells)
    if (cell.ctype == CellType::Numeric && !cell.blank()) xs.push_back(std::get<double>(cell.parsed));
  if (xs.empty()) return;
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double sum = 0;
  for (double x : xs) sum += x;
  const double mean = sum / n;
  out["AverageValue"] = mean;
  out["MedianValue"] = percentile(xs, 0.5);
  out["90PercentileValue"] = percentile(xs, 0.9);
  out["75PercentileValue"] = percentile(xs, 0.75);
  out["25PercentileValue"] = percentile(xs, 0.25);
  out["10PercentileValue"] = percentile(xs, 0.1);
  if (xs.size() >= 3) {
    double m2 = 0, m3 = 0;
    for (double x : xs) {
      const double d = x - mean;
      m2 += d * d;
      m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    if (m2 > 0) {
      const double g1 = m3 / std::pow(m2, 1.5);
      out["Skew"] = g1 * std::sqrt(n * (n - 1)) / (n - 2);
    }
  }
}

void date_properties(const Table& table, std::size_t col, Date today, std::size_t k, ColumnProperties& out) {
  static const std::pair<const char*, PredKind> kWindows[] = {
      {"InLastWeek", PredKind::InLastWeek},   {"InNextWeek", PredKind::InNextWeek},
      {"InThisWeek", PredKind::InThisWeek},   {"InLastMonth", PredKind::InLastMonth},
      {"InNextMonth", PredKind::InNextMonth}, {"InThisMonth", PredKind::InThisMonth},
      {"Today", PredKind::IsToday},
  };
  EvalContext ctx{.today = today, .target = col};
  for (const auto& [name, kind] : kWindows)
    out[name] = static_cast<double>(predicate_mask(Predicate::date_pred(kind, ""), table, ctx).count());

  std::vector<std::string> years;
  for (const auto& cell : table.column(col).cells)
    if (cell.ctype == CellType::Date && !cell.blank())
      years.push_back(std::to_string(static_cast<int>(std::chrono::year_month_day{std::get<Date>(cell.parsed)}.year())));
  out["Year"] = head(rank_values(years), k);
}

void text_properties(const Column& column, std::size_t k, ColumnProperties& out) {
  std::vector<std::string> values;
  for (const auto& cell : column.cells) values.push_back(cell.value);
  const RankedList ranked = rank_values(values);
  out["MostCommonValues"] = head(ranked, k);

  RankedList dups;
  for (const auto& rv : ranked)
    if (rv.count > 1) dups.push_back(rv);
  out["DuplicatesValues"] = head(dups, k);

  const TextShapeResult shape = classify_text_shape(values);
  RankedList cats;
  if (shape.shape == TextShape::Categorical)
    for (const auto& rv : ranked) cats.push_back(rv);
  out["Categories"] = head(cats, k);
  out["FreeText"] = shape.shape == TextShape::FreeText;

  double total = 0;
  std::size_t n = 0;
  for (const auto& v : values) {
    const std::string t = trim(v);
    if (t.empty()) continue;
    total += static_cast<double>(t.size());
    ++n;
  }
  if (n) out["AverageLength"] = total / static_cast<double>(n);
}

}  // namespace

TextShapeResult classify_text_shape(const std::vector<std::string>& values) {
  const RankedList ranked = rank_values(values);
  const std::size_t m = values.size();
  std::size_t non_blank = 0, tokens = 0;
  for (const auto& v : values) {
    if (trim(v).empty()) continue;
    ++non_blank;
    tokens += token_count(v);
  }
  TextShapeResult out;
  const double distinct = static_cast<double>(ranked.size());
  if (m >= 10 && distinct <= std::max(10.0, 0.1 * static_cast<double>(m))) {
    out.shape = TextShape::Categorical;
    for (const auto& rv : ranked) out.categories.push_back(rv.value);
    return out;
  }
  if (non_blank > 0) {
    const double avg_tokens = static_cast<double>(tokens) / static_cast<double>(non_blank);
    if (avg_tokens > 5 && distinct / static_cast<double>(non_blank) > 0.9) out.shape = TextShape::FreeText;
  }
  return out;
}

ColumnProperties extract_properties(const Table& table, std::size_t col, std::size_t k, Date today) {
  const Column& column = table.column(col);
  ColumnProperties out;

  std::size_t errors = 0, blanks = 0, logicals = 0, na = 0, dates = 0, formatted = 0;
  std::vector<std::string> formulas, values;
  for (const auto& cell : column.cells) {
    if (cell.blank()) ++blanks;
    if (is_error_literal(cell.value)) ++errors;
    if (is_na_literal(cell.value)) ++na;
    const std::string folded = fold_case(trim(cell.value));
    if (folded == "true" || folded == "false") ++logicals;
    if (parse_date(cell.value)) ++dates;
    if (!cell.format.empty()) ++formatted;
    if (cell.formula) formulas.push_back(*cell.formula);
    values.push_back(cell.value);
  }
  const RankedList ranked = rank_values(values);
  std::size_t duplicates = 0;
  for (const auto& rv : ranked)
    if (rv.count > 1) duplicates += rv.count;

  out["NumErrors"] = static_cast<double>(errors);
  out["NumBlanks"] = static_cast<double>(blanks);
  out["Formulas"] = head(rank_values(formulas), k);
  out["NumLogicals"] = static_cast<double>(logicals);
  out["NumNA"] = static_cast<double>(na);
  out["NumDuplicates"] = static_cast<double>(duplicates);
  out["NumUniques"] = static_cast<double>(ranked.size());
  out["NumDate"] = static_cast<double>(dates);
  out["NumFormatted"] = static_cast<double>(formatted);

  switch (column.type) {
    case CellType::Numeric: numeric_properties(column, out); break;
    case CellType::Date: date_properties(table, col, today, k, out); break;
    case CellType::Text: text_properties(column, k, out); break;
  }
  return out;
}

std::optional<double> number_property(const ColumnProperties& props, const std::string& name) {
  auto it = props.find(name);
  if (it == props.end()) return std::nullopt;
  if (auto d = std::get_if<double>(&it->second)) return *d;
  if (auto b = std::get_if<bool>(&it->second)) return *b ? 1.0 : 0.0;
  return std::nullopt;
}

const RankedList* list_property(const ColumnProperties& props, const std::string& name) {
  auto it = props.find(name);
  if (it == props.end()) return nullptr;
  return std::get_if<RankedList>(&it->second);
}

nlohmann::json properties_to_json(const ColumnProperties& props) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [name, value] : props) {
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, Date>) {
            out[name] = format_date(v);
          } else if constexpr (std::is_same_v<T, RankedList>) {
            nlohmann::json list = nlohmann::json::array();
            for (const auto& rv : v) list.push_back({{"value", rv.value}, {"count", rv.count}});
            out[name] = std::move(list);
          } else {
            out[name] = v;
          }
        },
        value);
  }
  return out;
}

}  // namespace autocf

namespace autocf {

namespace {

bool utf8_boundary(std::string_view s, std::size_t i) {
  return i == 0 || i >= s.size() || (static_cast<unsigned char>(s[i]) & 0xC0) != 0x80;
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80) {
      cur += ch;
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace

TextVocabulary text_vocabulary(const Column& column, const ColumnProperties& props) {
  TextVocabulary out;
  std::unordered_set<std::string> seen;
  auto add_value = [&](const std::string& v) {
    if (seen.insert(fold_case(v)).second) out.values.push_back(v);
  };
  if (auto common = list_property(props, "MostCommonValues"))
    for (const auto& rv : *common) add_value(rv.value);
  std::vector<std::string> raw;
  for (const auto& cell : column.cells) raw.push_back(cell.value);
  const TextShapeResult shape = classify_text_shape(raw);
  for (const auto& c : shape.categories) add_value(c);

  std::unordered_set<std::string> pre_seen, suf_seen;
  for (const auto& v : out.values) {
    for (std::size_t len = 1; len <= 3 && len <= v.size(); ++len) {
      if (utf8_boundary(v, len)) {
        std::string p = v.substr(0, len);
        if (!trim(p).empty() && pre_seen.insert(fold_case(p)).second) out.prefixes.push_back(p);
      }
      const std::size_t start = v.size() - len;
      if (utf8_boundary(v, start)) {
        std::string s = v.substr(start);
        if (!trim(s).empty() && suf_seen.insert(fold_case(s)).second) out.suffixes.push_back(s);
      }
    }
  }

  // Tokens shared by at least two cells, taken from multi-word values.
  std::unordered_set<std::string> candidate_tokens;
  for (const auto& v : out.values) {
    auto ws = words(fold_case(v));
    if (ws.size() < 2) continue;
    for (auto& w : ws)
      if (w.size() >= 2) candidate_tokens.insert(w);
  }
  std::vector<std::pair<std::string, std::size_t>> token_counts;
  for (const auto& t : candidate_tokens) {
    std::size_t n = 0;
    for (const auto& cell : column.cells) {
      if (cell.blank()) continue;
      for (const auto& w : words(fold_case(cell.value)))
        if (w == t) {
          ++n;
          break;
        }
    }
    if (n >= 2) token_counts.emplace_back(t, n);
  }
  std::sort(token_counts.begin(), token_counts.end(),
            [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; });
  for (std::size_t i = 0; i < token_counts.size() && i < 2 * kDefaultPropertyK; ++i)
    out.tokens.push_back(token_counts[i].first);
  return out;
}

std::vector<Date> date_quantiles(const Column& column) {
  std::vector<double> days;
  for (const auto& cell : column.cells)
    if (cell.ctype == CellType::Date && !cell.blank())
      days.push_back(static_cast<double>(std::get<Date>(cell.parsed).time_since_epoch().count()));
  if (days.empty()) return {};
  std::sort(days.begin(), days.end());
  std::vector<Date> out;
  for (double p : {0.25, 0.5, 0.75}) {
    const Date d{std::chrono::days{static_cast<int>(std::floor(percentile(days, p)))}};
    if (out.empty() || out.back() != d) out.push_back(d);
  }
  return out;
}

std::vector<std::pair<std::string, double>> numeric_stats(const ColumnProperties& props) {
  std::vector<std::pair<std::string, double>> out;
  for (const char* name : {"AverageValue", "MedianValue", "90PercentileValue", "75PercentileValue",
                           "25PercentileValue", "10PercentileValue"})
    if (auto v = number_property(props, name)) out.emplace_back(name, *v);
  return out;
}

}  // namespace autocf
