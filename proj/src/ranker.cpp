#include "autocf/ranker.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>
#include <unordered_map>

#include "autocf/error.hpp"
#include "autocf/hash.hpp"
#include "autocf/rng.hpp"

namespace autocf {

namespace {

constexpr PredKind kAllKinds[] = {
    PredKind::TextEquals,  PredKind::TextStartsWith, PredKind::TextEndsWith, PredKind::TextContains,
    PredKind::Compare,     PredKind::Between,        PredKind::DateBefore,   PredKind::DateAfter,
    PredKind::InLastWeek,  PredKind::InThisWeek,     PredKind::InNextWeek,   PredKind::InLastMonth,
    PredKind::InThisMonth, PredKind::InNextMonth,    PredKind::IsToday,      PredKind::YearEquals,
    PredKind::Blanks,      PredKind::Duplicates,     PredKind::Unique,       PredKind::IsError,
    PredKind::IsNA,
};
constexpr CmpOp kAllOps[] = {CmpOp::Gt, CmpOp::Ge, CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ne};

constexpr const char* kProvenance[] = {
    "text_top",     "text_common",  "text_category", "text_prefix",    "text_suffix",
    "text_token",   "text_other",   "num_average",   "num_median",     "num_p90",
    "num_p75",      "num_p25",      "num_p10",       "num_rounded",    "num_zero",
    "num_other",    "between_quartiles", "between_other", "year_observed", "year_other",
    "date_quantile", "date_other",
};
constexpr std::size_t kNumProvenance = std::size(kProvenance);

std::size_t provenance_index(std::string_view name) {
  for (std::size_t i = 0; i < kNumProvenance; ++i)
    if (name == kProvenance[i]) return i;
  throw std::logic_error("unknown provenance");
}

constexpr const char* kCountProps[] = {
    "NumErrors",  "NumBlanks",  "NumLogicals", "NumNA",       "NumDuplicates", "NumUniques",
    "NumDate",    "NumFormatted", "InLastWeek", "InNextWeek", "InThisWeek",    "InLastMonth",
    "InNextMonth", "InThisMonth", "Today",
};
constexpr const char* kStatProps[] = {
    "AverageValue", "MedianValue", "90PercentileValue", "75PercentileValue", "25PercentileValue",
    "10PercentileValue", "Skew",
};
constexpr const char* kListProps[] = {"Formulas", "MostCommonValues", "DuplicatesValues", "Categories", "Year"};

std::vector<std::string> build_names() {
  std::vector<std::string> names{"frac_highlighted", "highlights_none", "highlights_all", "distinct_share", "single_value", "clauses",
                                 "literals",         "negated",         "argument_length"};
  for (auto t : {"text", "numeric", "date"}) names.push_back(std::string("type:") + t);
  for (auto f : {"text", "numeric", "date", "general"}) names.push_back(std::string("family:") + f);
  for (auto k : kAllKinds) names.push_back("kind:" + std::string(to_string(k)));
  for (auto op : kAllOps) names.push_back("op:" + std::string(to_string(op)));
  names.push_back("on_target");
  names.push_back("arithmetic");
  names.push_back("column_vs_column");
  for (auto p : kProvenance) names.push_back(std::string("prov:") + p);
  names.push_back("const_digits");
  for (auto p : kCountProps) {
    names.push_back(std::string("col:") + p);
    names.push_back(std::string("has:") + p);
  }
  for (auto p : kStatProps) {
    names.push_back(std::string("col:") + p);
    names.push_back(std::string("has:") + p);
  }
  for (auto p : kListProps) {
    names.push_back(std::string("len:") + p);
    names.push_back(std::string("top:") + p);
  }
  names.push_back("col:FreeText");
  names.push_back("col:AverageLength");
  names.push_back("col:log_rows");
  return names;
}

/// Significant digits needed to write x (1 for 0 and round numbers).
int significant_digits(double x) {
  if (x == 0 || !std::isfinite(x)) return 1;
  for (int d = 1; d < 15; ++d) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", d, x);
    if (std::abs(std::strtod(buf, nullptr) - x) <= 1e-9 * std::abs(x)) return d;
  }
  return 15;
}

double signed_log(double x) { return x < 0 ? -std::log1p(-x) : std::log1p(x); }

std::vector<double> flatten_properties(const ColumnProperties& props, std::size_t m, std::size_t k) {
  std::vector<double> out;
  const double rows = std::max<double>(1, static_cast<double>(m));
  for (auto p : kCountProps) {
    auto v = number_property(props, p);
    out.push_back(v ? *v / rows : 0);
    out.push_back(v ? 1 : 0);
  }
  for (auto p : kStatProps) {
    auto v = number_property(props, p);
    double x = v ? *v : 0;
    x = std::string_view(p) == "Skew" ? std::clamp(x, -10.0, 10.0) : signed_log(x);
    out.push_back(x);
    out.push_back(v ? 1 : 0);
  }
  for (auto p : kListProps) {
    const RankedList* list = list_property(props, p);
    out.push_back(list ? static_cast<double>(list->size()) / static_cast<double>(k) : 0);
    out.push_back(list && !list->empty() ? static_cast<double>(list->front().count) / rows : 0);
  }
  out.push_back(number_property(props, "FreeText").value_or(0));
  out.push_back(std::log1p(number_property(props, "AverageLength").value_or(0)));
  out.push_back(std::log1p(static_cast<double>(m)));
  return out;
}

bool references_target(const Predicate& p, const FeatureContext& ctx) {
  const std::string& header = ctx.table->column(ctx.target).header;
  auto is_target = [&](const std::string& col) { return col.empty() || fold_case(col) == fold_case(header); };
  if (p.kind == PredKind::Compare || p.kind == PredKind::Between) {
    std::vector<std::string> cols;
    p.lhs.collect_columns(cols);
    if (p.kind == PredKind::Compare) p.rhs.collect_columns(cols);
    return !cols.empty() && std::all_of(cols.begin(), cols.end(), is_target);
  }
  return is_target(p.column);
}

constexpr std::pair<const char*, const char*> kStatLabels[] = {
    {"AverageValue", "num_average"},  {"MedianValue", "num_median"},       {"90PercentileValue", "num_p90"},
    {"75PercentileValue", "num_p75"}, {"25PercentileValue", "num_p25"},    {"10PercentileValue", "num_p10"},
};

const char* stat_label(std::string_view prop) {
  for (const auto& [name, label] : kStatLabels)
    if (prop == name) return label;
  return nullptr;
}

/// Exact statistics mark their sources; rounded ones mark their sources and
/// num_rounded. Constants can coincide with several statistics.
void mark_numeric_provenance(double c, const FeatureContext& ctx, std::vector<double>& prov) {
  auto mark = [&](std::string_view name) { prov[provenance_index(name)] += 1; };
  std::set<std::string_view> exact, rounded;
  for (const auto& [name, value] : ctx.stats)
    if (value == c)
      if (const char* label = stat_label(name)) exact.insert(label);
  for (const auto& [value, name] : ctx.rounded_stats)
    if (value == c)
      if (const char* label = stat_label(name)) rounded.insert(label);
  if (!exact.empty()) {
    for (auto label : exact) mark(label);
  } else if (!rounded.empty()) {
    for (auto label : rounded) mark(label);
    mark("num_rounded");
  } else {
    mark(c == 0 ? "num_zero" : "num_other");
  }
}

void literal_provenance(const Predicate& p, const FeatureContext& ctx, bool on_target, std::vector<double>& prov) {
  auto mark = [&](std::string_view name) { prov[provenance_index(name)] += 1; };
  switch (family_of(p.kind)) {
    case PredFamily::Text: {
      const std::string t = fold_case(trim(p.text));
      bool any = false;
      if (on_target) {
        if (!ctx.common_values.empty() && ctx.common_values.front() == t) mark("text_top"), any = true;
        if (std::find(ctx.common_values.begin(), ctx.common_values.end(), t) != ctx.common_values.end())
          mark("text_common"), any = true;
        if (ctx.categories.contains(t)) mark("text_category"), any = true;
        if (ctx.prefixes.contains(t)) mark("text_prefix"), any = true;
        if (ctx.suffixes.contains(t)) mark("text_suffix"), any = true;
        if (ctx.tokens.contains(t)) mark("text_token"), any = true;
      }
      if (!any) mark("text_other");
      return;
    }
    case PredFamily::Numeric: {
      if (p.kind == PredKind::Between) {
        auto p25 = number_property(ctx.props, "25PercentileValue");
        auto p75 = number_property(ctx.props, "75PercentileValue");
        const bool quartiles = on_target && p25 && p75 && p.lo == *p25 && p.hi == *p75;
        mark(quartiles ? "between_quartiles" : "between_other");
        return;
      }
      const bool lhs_col = p.lhs.has_column(), rhs_col = p.rhs.has_column();
      const NumExpr& side = lhs_col ? p.lhs : p.rhs;
      const NumExpr& other = lhs_col ? p.rhs : p.lhs;
      if (on_target && lhs_col != rhs_col && side.kind() == NumExpr::Kind::Column &&
          other.kind() == NumExpr::Kind::Constant)
        mark_numeric_provenance(other.value(), ctx, prov);
      else
        mark("num_other");
      return;
    }
    case PredFamily::Date:
      if (p.kind == PredKind::YearEquals)
        mark(on_target && ctx.years.contains(p.year) ? "year_observed" : "year_other");
      else if (p.kind == PredKind::DateBefore || p.kind == PredKind::DateAfter)
        mark(on_target && std::find(ctx.date_quantiles.begin(), ctx.date_quantiles.end(), p.date) !=
                              ctx.date_quantiles.end()
                 ? "date_quantile"
                 : "date_other");
      return;
    case PredFamily::General: return;
  }
}

std::size_t constant_arguments(const Predicate& p) {
  switch (p.kind) {
    case PredKind::TextEquals:
    case PredKind::TextStartsWith:
    case PredKind::TextEndsWith:
    case PredKind::TextContains:
    case PredKind::DateBefore:
    case PredKind::DateAfter:
    case PredKind::YearEquals: return 1;
    case PredKind::Between: {
      std::vector<double> c;
      p.lhs.collect_constants(c);
      return c.size() + 2;
    }
    case PredKind::Compare: {
      std::vector<double> c;
      p.lhs.collect_constants(c);
      p.rhs.collect_constants(c);
      return c.size();
    }
    default: return 0;
  }
}

// Adam state for one parameter vector.
struct Moments {
  std::vector<double> m, v;
  explicit Moments(std::size_t n = 0) : m(n, 0), v(n, 0) {}
};

}  // namespace

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = build_names();
  return names;
}

std::vector<double> nice_constants(double x) {
  std::vector<double> out;
  if (x == 0 || !std::isfinite(x)) return out;
  for (int digits : {1, 2}) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    const double r = parse_number(buf).value_or(0);
    if (r != x && std::find(out.begin(), out.end(), r) == out.end()) out.push_back(r);
  }
  return out;
}

FeatureContext make_feature_context(const Table& table, std::size_t target, Date today, std::size_t k) {
  FeatureContext ctx;
  ctx.table = &table;
  ctx.target = target;
  ctx.today = today;
  ctx.props = extract_properties(table, target, k, today);
  const Column& column = table.column(target);
  if (column.type == CellType::Text) {
    if (auto common = list_property(ctx.props, "MostCommonValues"))
      for (const auto& rv : *common) ctx.common_values.push_back(fold_case(rv.value));
    std::vector<std::string> raw;
    for (const auto& cell : column.cells) raw.push_back(cell.value);
    for (const auto& c : classify_text_shape(raw).categories) ctx.categories.insert(fold_case(c));
    const TextVocabulary vocab = text_vocabulary(column, ctx.props);
    for (const auto& p : vocab.prefixes) ctx.prefixes.insert(fold_case(p));
    for (const auto& s : vocab.suffixes) ctx.suffixes.insert(fold_case(s));
    for (const auto& t : vocab.tokens) ctx.tokens.insert(t);
  }
  ctx.stats = numeric_stats(ctx.props);
  for (const auto& [name, value] : ctx.stats)
    for (double nice : nice_constants(value)) ctx.rounded_stats.emplace_back(nice, name);
  if (column.type == CellType::Date) {
    for (const auto& cell : column.cells)
      if (cell.ctype == CellType::Date && !cell.blank())
        ctx.years.insert(static_cast<int>(std::chrono::year_month_day{std::get<Date>(cell.parsed)}.year()));
    ctx.date_quantiles = date_quantiles(column);
  }
  std::unordered_map<std::string, std::uint32_t> ids;
  for (const auto& cell : column.cells) {
    const std::string key = cell.blank() ? std::string("\x01blank") : fold_case(cell.value);
    ctx.value_ids.push_back(ids.try_emplace(key, static_cast<std::uint32_t>(ids.size())).first->second);
  }
  ctx.n_values = ids.size();
  ctx.column_features = flatten_properties(ctx.props, table.n_rows(), k);
  return ctx;
}

NodeFeatures node_features(const Condition& cond, const ExecutionVector& mask, const FeatureContext& ctx) {
  NodeFeatures nf;
  const std::size_t m = mask.size();
  const std::size_t count = mask.count();
  nf.fraction_highlighted = m ? static_cast<double>(count) / static_cast<double>(m) : 0;
  nf.rule_type = ctx.table->column(ctx.target).type;

  std::vector<double> family(4, 0), kinds(std::size(kAllKinds), 0), ops(std::size(kAllOps), 0),
      prov(kNumProvenance, 0);
  double literals = 0, negated = 0, args = 0, on_target = 0, arithmetic = 0, col_vs_col = 0;
  double digits = 0, n_consts = 0;
  bool first = true;
  for (const auto& clause : cond.clauses) {
    for (const auto& lit : clause) {
      const Predicate& p = lit.pred;
      literals += 1;
      if (lit.negated) negated += 1;
      args += static_cast<double>(constant_arguments(p));
      const PredFamily fam = family_of(p.kind);
      if (first) nf.rule_category = fam, first = false;
      family[static_cast<std::size_t>(fam)] += 1;
      kinds[static_cast<std::size_t>(p.kind)] += 1;
      const bool tgt = references_target(p, ctx);
      if (tgt) on_target += 1;
      if (p.kind == PredKind::Compare) {
        const bool lc = p.lhs.has_column(), rc = p.rhs.has_column();
        const CmpOp op = (!lc && rc) ? mirror(p.op) : p.op;
        ops[static_cast<std::size_t>(op)] += 1;
        if (lc && rc) col_vs_col += 1;
        auto arith = [](const NumExpr& e) { return e.kind() == NumExpr::Kind::Add || e.kind() == NumExpr::Kind::Sub; };
        if (arith(p.lhs) || arith(p.rhs)) arithmetic += 1;
      }
      if (p.kind == PredKind::Compare || p.kind == PredKind::Between) {
        std::vector<double> consts;
        p.lhs.collect_constants(consts);
        if (p.kind == PredKind::Compare) p.rhs.collect_constants(consts);
        else consts.insert(consts.end(), {p.lo, p.hi});
        for (double c : consts) digits += significant_digits(c), n_consts += 1;
      }
      literal_provenance(p, ctx, tgt, prov);
    }
  }
  nf.argument_length = args;

  const double lits = std::max(1.0, literals);
  auto& v = nf.values;
  v.reserve(feature_names().size());
  v.push_back(nf.fraction_highlighted);
  v.push_back(count == 0 ? 1 : 0);
  v.push_back(m > 0 && count == m ? 1 : 0);
  {
    std::unordered_set<std::uint32_t> hit;
    for (std::size_t i = 0; i < m && i < ctx.value_ids.size(); ++i)
      if (mask.test(i)) hit.insert(ctx.value_ids[i]);
    v.push_back(ctx.n_values ? static_cast<double>(hit.size()) / static_cast<double>(ctx.n_values) : 0);
    v.push_back(hit.size() == 1 ? 1 : 0);
  }
  v.push_back(static_cast<double>(cond.clauses.size()));
  v.push_back(literals);
  v.push_back(negated / lits);
  v.push_back(args);
  for (CellType t : {CellType::Text, CellType::Numeric, CellType::Date}) v.push_back(nf.rule_type == t ? 1 : 0);
  for (double f : family) v.push_back(f / lits);
  for (double k : kinds) v.push_back(k / lits);
  for (double o : ops) v.push_back(o / lits);
  v.push_back(on_target / lits);
  v.push_back(arithmetic / lits);
  v.push_back(col_vs_col / lits);
  for (double p : prov) v.push_back(p / lits);
  v.push_back(n_consts ? digits / n_consts : 0);
  v.insert(v.end(), ctx.column_features.begin(), ctx.column_features.end());
  return nf;
}

// ---------------------------------------------------------------------------

double RankerModel::logit(const std::vector<double>& features) const {
  if (features.size() != mean.size()) throw Error("feature vector size does not match the model");
  std::vector<double> a(features.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = (features[i] - mean[i]) / scale[i];
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const DenseLayer& layer = layers[l];
    std::vector<double> z(layer.out);
    for (std::size_t o = 0; o < layer.out; ++o) {
      double s = layer.bias[o];
      const double* w = &layer.weights[o * layer.in];
      for (std::size_t i = 0; i < layer.in; ++i) s += w[i] * a[i];
      z[o] = (l + 1 < layers.size()) ? std::max(0.0, s) : s;
    }
    a = std::move(z);
  }
  return a.at(0);
}

nlohmann::json RankerModel::to_json() const {
  nlohmann::json layers_json = nlohmann::json::array();
  for (const auto& l : layers)
    layers_json.push_back({{"in", l.in}, {"out", l.out}, {"weights", l.weights}, {"bias", l.bias}});
  return {{"schema_version", kSchemaVersion},
          {"feature_schema", feature_schema},
          {"normalization", {{"mean", mean}, {"scale", scale}}},
          {"layers", layers_json}};
}

RankerModel RankerModel::from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion)
      throw InputError("unsupported ranker schema_version " + j.at("schema_version").dump());
    RankerModel m;
    m.feature_schema = j.at("feature_schema").get<std::vector<std::string>>();
    if (m.feature_schema != feature_names())
      throw InputError("ranker feature schema does not match this build; retrain the model");
    m.mean = j.at("normalization").at("mean").get<std::vector<double>>();
    m.scale = j.at("normalization").at("scale").get<std::vector<double>>();
    for (const auto& l : j.at("layers")) {
      DenseLayer layer;
      layer.in = l.at("in").get<std::size_t>();
      layer.out = l.at("out").get<std::size_t>();
      layer.weights = l.at("weights").get<std::vector<double>>();
      layer.bias = l.at("bias").get<std::vector<double>>();
      if (layer.weights.size() != layer.in * layer.out || layer.bias.size() != layer.out)
        throw InputError("ranker layer has inconsistent dimensions");
      m.layers.push_back(std::move(layer));
    }
    if (m.mean.size() != m.feature_schema.size() || m.scale.size() != m.feature_schema.size() ||
        m.layers.empty() || m.layers.front().in != m.mean.size() || m.layers.back().out != 1)
      throw InputError("ranker model dimensions are inconsistent");
    for (std::size_t i = 1; i < m.layers.size(); ++i)
      if (m.layers[i].in != m.layers[i - 1].out) throw InputError("ranker layer sizes do not chain");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed ranker model: ") + e.what());
  }
}

std::string RankerModel::serialize() const { return to_json().dump() + "\n"; }

std::string RankerModel::hash() const { return sha256_hex(serialize()); }

void RankerModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << serialize();
}

RankerModel RankerModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read ranker model " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed ranker model " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

RankerModel RankerModel::load_default() {
  return load(std::filesystem::path(AUTOCF_ASSET_DIR) / "default_ranker.json");
}

RankerModel fit_mlp(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                    const std::vector<double>& sample_weight, const MlpConfig& cfg) {
  if (x.empty()) throw Error("no training examples");
  const std::size_t d = x.front().size();
  const std::size_t n = x.size();
  RankerModel model;
  model.feature_schema = feature_names();
  if (model.feature_schema.size() != d) throw Error("training features do not match the feature schema");

  model.mean.assign(d, 0);
  model.scale.assign(d, 0);
  for (const auto& row : x)
    for (std::size_t i = 0; i < d; ++i) model.mean[i] += row[i];
  for (auto& v : model.mean) v /= static_cast<double>(n);
  for (const auto& row : x)
    for (std::size_t i = 0; i < d; ++i) model.scale[i] += (row[i] - model.mean[i]) * (row[i] - model.mean[i]);
  for (auto& v : model.scale) {
    v = std::sqrt(v / static_cast<double>(n));
    if (v < 1e-9) v = 1;
  }
  std::vector<std::vector<double>> xs(n, std::vector<double>(d));
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < d; ++i) xs[r][i] = (x[r][i] - model.mean[i]) / model.scale[i];

  Rng rng(cfg.seed);
  std::vector<std::size_t> widths{d};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(1);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer;
    layer.in = widths[l];
    layer.out = widths[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.in));  // He uniform
    layer.weights.resize(layer.in * layer.out);
    for (auto& w : layer.weights) w = rng.uniform(-limit, limit);
    layer.bias.assign(layer.out, 0);
    model.layers.push_back(std::move(layer));
  }

  const std::size_t L = model.layers.size();
  std::vector<Moments> mw, mb;
  for (const auto& layer : model.layers) {
    mw.emplace_back(layer.weights.size());
    mb.emplace_back(layer.bias.size());
  }
  std::vector<std::vector<double>> gw(L), gb(L);
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::size_t step = 0;

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  double weight_total = 0;
  for (double w : sample_weight) weight_total += w;
  const double weight_norm = static_cast<double>(n) / weight_total;

  std::vector<std::vector<double>> acts(L + 1), pre(L);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      for (std::size_t l = 0; l < L; ++l) {
        gw[l].assign(model.layers[l].weights.size(), 0);
        gb[l].assign(model.layers[l].bias.size(), 0);
      }
      for (std::size_t bi = start; bi < end; ++bi) {
        const std::size_t r = order[bi];
        acts[0] = xs[r];
        for (std::size_t l = 0; l < L; ++l) {
          const DenseLayer& layer = model.layers[l];
          pre[l].assign(layer.out, 0);
          acts[l + 1].assign(layer.out, 0);
          for (std::size_t o = 0; o < layer.out; ++o) {
            double s = layer.bias[o];
            const double* w = &layer.weights[o * layer.in];
            for (std::size_t i = 0; i < layer.in; ++i) s += w[i] * acts[l][i];
            pre[l][o] = s;
            acts[l + 1][o] = (l + 1 < L) ? std::max(0.0, s) : s;
          }
        }
        // d(loss)/d(logit) for the weighted logistic loss
        std::vector<double> delta{(sigmoid(acts[L][0]) - y[r]) * sample_weight[r] * weight_norm};
        for (std::size_t l = L; l-- > 0;) {
          const DenseLayer& layer = model.layers[l];
          std::vector<double> prev(layer.in, 0);
          for (std::size_t o = 0; o < layer.out; ++o) {
            gb[l][o] += delta[o];
            double* g = &gw[l][o * layer.in];
            const double* w = &layer.weights[o * layer.in];
            for (std::size_t i = 0; i < layer.in; ++i) {
              g[i] += delta[o] * acts[l][i];
              prev[i] += delta[o] * w[i];
            }
          }
          if (l > 0)
            for (std::size_t i = 0; i < layer.in; ++i) prev[i] = pre[l - 1][i] > 0 ? prev[i] : 0;
          delta = std::move(prev);
        }
      }
      ++step;
      const double bsz = static_cast<double>(end - start);
      const double c1 = 1 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t l = 0; l < L; ++l) {
        auto update = [&](std::vector<double>& params, std::vector<double>& grads, Moments& mom, bool decay) {
          for (std::size_t i = 0; i < params.size(); ++i) {
            const double g = grads[i] / bsz + (decay ? cfg.l2 * params[i] : 0);
            mom.m[i] = beta1 * mom.m[i] + (1 - beta1) * g;
            mom.v[i] = beta2 * mom.v[i] + (1 - beta2) * g * g;
            params[i] -= cfg.learning_rate * (mom.m[i] / c1) / (std::sqrt(mom.v[i] / c2) + eps);
          }
        };
        update(model.layers[l].weights, gw[l], mw[l], true);
        update(model.layers[l].bias, gb[l], mb[l], false);
      }
    }
  }
  return model;
}

}  // namespace autocf
