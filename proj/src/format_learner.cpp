#include "autocf/format_learner.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "autocf/error.hpp"

namespace autocf {

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1;
  std::size_t common = 0;
  for (const auto& x : a) common += b.count(x);
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

double similarity(const CorpusRecord& record, const Table& table, const Condition& cond, const SimilarityWeights& w) {
  return w.header * jaccard(record.header_set, header_set_of(table)) +
         w.formula * jaccard(record.formula_set, formula_set_of(table)) +
         w.predicate * jaccard(record.predicate_sketch_set, predicate_sketches(cond)) +
         w.constant * jaccard(record.constant_set, constants_of(cond));
}

std::vector<Retrieved> retrieve_similar(const std::vector<CorpusRecord>& corpus, const Table& table,
                                        const Condition& cond, const SimilarityWeights& w,
                                        const RetrievalConfig& cfg, const std::string& exclude_id) {
  if (cfg.lambda_n < 1) throw Error("lambda_n must be at least 1");
  const auto headers = header_set_of(table);
  const auto formulas = formula_set_of(table);
  const auto sketches = predicate_sketches(cond);
  const auto constants = constants_of(cond);
  std::vector<Retrieved> all;
  for (const auto& r : corpus) {
    if (!exclude_id.empty() && r.id == exclude_id) continue;
    const double s = w.header * jaccard(r.header_set, headers) + w.formula * jaccard(r.formula_set, formulas) +
                     w.predicate * jaccard(r.predicate_sketch_set, sketches) +
                     w.constant * jaccard(r.constant_set, constants);
    if (s >= cfg.lambda_t) all.push_back({&r, s});
  }
  std::sort(all.begin(), all.end(), [](const Retrieved& a, const Retrieved& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.record->id < b.record->id;
  });
  if (all.size() > cfg.lambda_n) all.resize(cfg.lambda_n);
  return all;
}

Format fallback_format() {
  Format f;
  f.fill = css_color_by_name("lightyellow");
  return f;
}

namespace {

struct Weighted {
  const Format* format;
  double weight;
};

std::optional<Rgb> pick_color(const std::vector<Weighted>& cands, std::optional<Rgb> Format::*field, double total) {
  std::map<std::string_view, std::pair<double, Rgb>> buckets;
  double present = 0;
  for (const auto& c : cands) {
    const auto& v = c.format->*field;
    if (!v) continue;
    present += c.weight;
    const NamedColor& name = nearest_web_color(*v);
    auto& b = buckets[name.name];
    b.first += c.weight;
    b.second = name.rgb;
  }
  if (present / total <= 0.5) return std::nullopt;
  const std::pair<double, Rgb>* best = nullptr;
  for (const auto& [name, b] : buckets)  // alphabetical, so ties go to the first name
    if (!best || b.first > best->first) best = &b;
  return best->second;
}

std::optional<bool> pick_flag(const std::vector<Weighted>& cands, std::optional<bool> Format::*field, double total) {
  double present = 0, yes = 0;
  for (const auto& c : cands) {
    const auto& v = c.format->*field;
    if (!v) continue;
    present += c.weight;
    if (*v) yes += c.weight;
  }
  if (present / total <= 0.5) return std::nullopt;
  return yes * 2 >= present;
}

}  // namespace

Format select_format(const FormatCandidateSet& candidates) {
  std::vector<Weighted> cands;
  for (const auto& f : candidates.sheet) cands.push_back({&f, kSheetWeight});
  for (const auto& f : candidates.retrieved) cands.push_back({&f, kRetrievedWeight});
  if (cands.empty()) return fallback_format();
  double total = 0;
  for (const auto& c : cands) total += c.weight;
  Format out;
  out.fill = pick_color(cands, &Format::fill, total);
  out.font = pick_color(cands, &Format::font, total);
  out.bold = pick_flag(cands, &Format::bold, total);
  out.italic = pick_flag(cands, &Format::italic, total);
  out.underline = pick_flag(cands, &Format::underline, total);
  return out;
}

std::vector<Format> sheet_formats(const Table& table) {
  std::vector<Format> out;
  std::set<std::string> seen;
  for (const auto& c : table.columns())
    for (const auto& cell : c.cells)
      if (!cell.format.empty() && seen.insert(format_to_json(cell.format).dump()).second) out.push_back(cell.format);
  return out;
}

Format ground_format(const Format& fmt, const Table& table) {
  if (!fmt.fill) return fmt;
  std::size_t fills = 0, light = 0, dark = 0;
  for (const auto& c : table.columns()) {
    for (const auto& cell : c.cells) {
      if (!cell.format.fill) continue;
      ++fills;
      const double l = to_hsl(*cell.format.fill).l;
      if (l > kLightShade) ++light;
      if (l < kDarkShade) ++dark;
    }
  }
  if (fills == 0) return fmt;
  std::optional<double> target;
  if (static_cast<double>(light) >= kShadeShare * static_cast<double>(fills)) target = kLightTarget;
  else if (static_cast<double>(dark) >= kShadeShare * static_cast<double>(fills)) target = kDarkTarget;
  if (!target) return fmt;
  Hsl hsl = to_hsl(*fmt.fill);
  // already at the shade up to 8-bit rounding: leave it, which keeps this idempotent
  if (std::abs(hsl.l - *target) < 0.01) return fmt;
  hsl.l = *target;
  Format out = fmt;
  out.fill = from_hsl(hsl);
  return out;
}

Format learn_format(const std::vector<CorpusRecord>& corpus, const Table& table, const Condition& cond,
                    const FormatLearnerConfig& cfg, const std::string& exclude_id) {
  FormatCandidateSet set;
  if (cfg.use_sheet) set.sheet = sheet_formats(table);
  if (cfg.use_corpus)
    for (const auto& r : retrieve_similar(corpus, table, cond, cfg.weights, cfg.retrieval, exclude_id))
      set.retrieved.push_back(r.record->format);
  Format f = select_format(set);
  if (f.empty()) f = fallback_format();
  return cfg.ground ? ground_format(f, table) : f;
}

}  // namespace autocf
