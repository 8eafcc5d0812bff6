#include "autocf/symbolic.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>
#include <deque>
#include <cmath>

#include "autocf/error.hpp"
#include "autocf/evaluate.hpp"
#include "autocf/rng.hpp"

namespace autocf {

namespace {

constexpr CmpOp kThresholdOps[] = {CmpOp::Gt, CmpOp::Ge, CmpOp::Lt, CmpOp::Le};

class PredicateList {
 public:
  void add(Predicate p) {
    if (seen_.insert(print(p)).second) preds_.push_back(std::move(p));
  }
  std::vector<Predicate> take() { return std::move(preds_); }

 private:
  std::vector<Predicate> preds_;
  std::unordered_set<std::string> seen_;
};

bool type_checks(const Condition& c, const Table& table, std::size_t target) {
  try {
    type_check(c, table, EvalContext{.today = {}, .target = target});
    return true;
  } catch (const Error&) {
    return false;
  }
}

std::size_t count_unique(const Column& column) {
  const RankedList ranked = [&] {
    std::vector<std::string> values;
    for (const auto& cell : column.cells) values.push_back(cell.value);
    return rank_values(values);
  }();
  std::size_t n = 0;
  for (const auto& rv : ranked)
    if (rv.count == 1) ++n;
  return n;
}

void general_predicates(const ColumnProperties& props, const Column& column, PredicateList& out) {
  const std::string& h = column.header;
  if (number_property(props, "NumBlanks").value_or(0) > 0) out.add(Predicate::general(PredKind::Blanks, h));
  if (number_property(props, "NumErrors").value_or(0) > 0) out.add(Predicate::general(PredKind::IsError, h));
  if (number_property(props, "NumNA").value_or(0) > 0) out.add(Predicate::general(PredKind::IsNA, h));
}

}  // namespace

Condition bind_target(const Condition& c, const std::string& header) {
  Condition out = c;
  for (auto& clause : out.clauses)
    for (auto& lit : clause)
      if (lit.pred.kind != PredKind::Compare && lit.pred.kind != PredKind::Between && lit.pred.column.empty())
        lit.pred.column = header;
  return out;
}

std::optional<Condition> instantiate(const Component& c, const Table& table, std::size_t target) {
  if (target >= table.n_cols()) return std::nullopt;
  Condition bound = bind_target(c.body, table.column(target).header);
  if (!type_checks(bound, table, target)) return std::nullopt;
  return bound;
}

bool negatable(const Predicate& p) { return p.kind == PredKind::Blanks || family_of(p.kind) == PredFamily::Text; }

std::vector<Predicate> enumerate_predicates(const ColumnProperties& props, const Table& table, std::size_t col) {
  const Column& column = table.column(col);
  const std::string& h = column.header;
  PredicateList out;
  switch (column.type) {
    case CellType::Text: {
      const TextVocabulary vocab = text_vocabulary(column, props);
      for (const auto& v : vocab.values) out.add(Predicate::text_pred(PredKind::TextEquals, h, v));
      for (const auto& p : vocab.prefixes) out.add(Predicate::text_pred(PredKind::TextStartsWith, h, p));
      for (const auto& s : vocab.suffixes) out.add(Predicate::text_pred(PredKind::TextEndsWith, h, s));
      for (const auto& t : vocab.tokens) out.add(Predicate::text_pred(PredKind::TextContains, h, t));
      if (number_property(props, "NumDuplicates").value_or(0) > 0) {
        out.add(Predicate::general(PredKind::Duplicates, h));
        if (count_unique(column) > 0) out.add(Predicate::general(PredKind::Unique, h));
      }
      break;
    }
    case CellType::Numeric: {
      const auto stats = numeric_stats(props);
      std::vector<double> constants;
      auto add_constant = [&](double c) {
        if (std::find(constants.begin(), constants.end(), c) == constants.end()) constants.push_back(c);
      };
      for (const auto& [name, value] : stats) {
        add_constant(value);
        for (double nice : nice_constants(value)) add_constant(nice);
      }
      double lo = 0, hi = 0;
      bool any = false;
      for (const auto& cell : column.cells) {
        if (cell.ctype != CellType::Numeric || cell.blank()) continue;
        const double v = std::get<double>(cell.parsed);
        lo = any ? std::min(lo, v) : v;
        hi = any ? std::max(hi, v) : v;
        any = true;
      }
      if (any && lo < 0 && hi > 0) add_constant(0);
      for (double c : constants)
        for (CmpOp op : kThresholdOps) out.add(Predicate::compare(NumExpr::column(h), op, NumExpr::constant(c)));
      auto p25 = number_property(props, "25PercentileValue");
      auto p75 = number_property(props, "75PercentileValue");
      if (p25 && p75 && *p25 < *p75) out.add(Predicate::between(NumExpr::column(h), *p25, *p75));
      break;
    }
    case CellType::Date: {
      for (PredKind k : {PredKind::InLastWeek, PredKind::InThisWeek, PredKind::InNextWeek, PredKind::InLastMonth,
                         PredKind::InThisMonth, PredKind::InNextMonth, PredKind::IsToday})
        out.add(Predicate::date_pred(k, h));
      if (auto years = list_property(props, "Year"))
        for (const auto& rv : *years) out.add(Predicate::year_equals(h, std::stoi(rv.value)));
      for (Date d : date_quantiles(column)) {
        out.add(Predicate::date_pred(PredKind::DateBefore, h, d));
        out.add(Predicate::date_pred(PredKind::DateAfter, h, d));
      }
      break;
    }
  }
  general_predicates(props, column, out);
  std::vector<Predicate> preds = out.take();
  std::erase_if(preds, [&](const Predicate& p) { return !type_checks(single(p), table, col); });
  return preds;
}

std::vector<Predicate> enumerate_boosted_predicates(const std::set<std::string>& terms, const Table& table,
                                                    std::size_t target) {
  std::vector<std::string> num_cols, text_cols;
  std::vector<double> num_consts;
  std::vector<std::string> text_consts;
  std::vector<Date> date_consts;
  for (const auto& term : terms) {
    if (auto idx = table.find_column(term)) {
      const Column& c = table.column(*idx);
      if (c.type == CellType::Numeric) num_cols.push_back(c.header);
      if (c.type == CellType::Text) text_cols.push_back(c.header);
      continue;
    }
    if (auto d = parse_date(term))
      date_consts.push_back(*d);
    else if (auto v = parse_number(term))
      num_consts.push_back(*v);
    else
      text_consts.push_back(term);
  }

  PredicateList out;
  for (const auto& c : num_cols)
    for (double k : num_consts)
      for (CmpOp op : kThresholdOps) out.add(Predicate::compare(NumExpr::column(c), op, NumExpr::constant(k)));
  std::vector<double> diff_consts = num_consts;
  if (std::find(diff_consts.begin(), diff_consts.end(), 0.0) == diff_consts.end()) diff_consts.push_back(0);
  for (const auto& a : num_cols) {
    for (const auto& b : num_cols) {
      if (a == b) continue;
      for (CmpOp op : {CmpOp::Gt, CmpOp::Lt})
        out.add(Predicate::compare(NumExpr::column(a), op, NumExpr::column(b)));
      for (double k : diff_consts)
        for (CmpOp op : kThresholdOps)
          out.add(Predicate::compare(NumExpr::sub(NumExpr::column(a), NumExpr::column(b)), op, NumExpr::constant(k)));
    }
  }
  const Column& tc = table.column(target);
  for (const auto& t : text_consts) {
    if (tc.type == CellType::Text) {
      out.add(Predicate::text_pred(PredKind::TextEquals, tc.header, t));
      out.add(Predicate::text_pred(PredKind::TextContains, tc.header, t));
    }
    for (const auto& c : text_cols)
      if (c != tc.header) out.add(Predicate::text_pred(PredKind::TextEquals, c, t));
  }
  if (tc.type == CellType::Date)
    for (Date d : date_consts) {
      out.add(Predicate::date_pred(PredKind::DateBefore, tc.header, d));
      out.add(Predicate::date_pred(PredKind::DateAfter, tc.header, d));
    }
  std::vector<Predicate> preds = out.take();
  std::erase_if(preds, [&](const Predicate& p) { return !type_checks(single(p), table, target); });
  return preds;
}

bool uses_boosted_term(const Condition& c, const std::set<std::string>& terms) {
  if (terms.empty()) return false;
  for (const auto& col : columns_of(c))
    if (terms.contains(fold_case(col))) return true;
  for (const auto& k : constants_of(c))
    if (terms.contains(k)) return true;
  return false;
}

double apply_boost(double score, double fraction) { return score + fraction * std::abs(score); }

double score_node(const Condition& cond, const Table& table, std::size_t col, const RankerModel& ranker,
                  Date today) {
  const FeatureContext ctx = make_feature_context(table, col, today);
  const ExecutionVector mask = execute(cond, table, EvalContext{.today = today, .target = col});
  return ranker.logit(node_features(cond, mask, ctx).values);
}

// ---------------------------------------------------------------------------

namespace {

struct Node {
  Condition cond;  // normalized
  std::string key;
  ExecutionVector mask;
  double score = 0, boosted_score = 0;
  bool boosted = false, neural = false;
};

class Search {
 public:
  Search(const Table& table, std::size_t col, const BeamConfig& cfg, const RankerModel& ranker,
         const std::set<std::string>& terms, Date today)
      : table_(table),
        cfg_(cfg),
        ranker_(ranker),
        terms_(terms),
        eval_{.today = today, .target = col},
        features_(make_feature_context(table, col, today)) {}

  const ExecutionVector& literal_mask_of(const Literal& lit) {
    std::string key = print(lit);
    auto it = literal_masks_.find(key);
    if (it == literal_masks_.end()) it = literal_masks_.emplace(std::move(key), literal_mask(lit, table_, eval_)).first;
    return it->second;
  }

  ExecutionVector mask_of(const Condition& cond, std::size_t skip_clause = SIZE_MAX, std::size_t skip_literal = SIZE_MAX) {
    ExecutionVector out(table_.n_rows());
    for (std::size_t c = 0; c < cond.clauses.size(); ++c) {
      if (c == skip_clause && skip_literal == SIZE_MAX) continue;
      ExecutionVector acc(table_.n_rows(), true);
      for (std::size_t l = 0; l < cond.clauses[c].size(); ++l)
        if (c != skip_clause || l != skip_literal) acc &= literal_mask_of(cond.clauses[c][l]);
      out |= acc;
    }
    return out;
  }

  /// True when some clause or literal can be dropped without changing the mask.
  bool redundant(const Condition& cond, const ExecutionVector& mask) {
    for (std::size_t c = 0; c < cond.clauses.size(); ++c) {
      if (cond.clauses.size() > 1 && mask_of(cond, c) == mask) return true;
      if (cond.clauses[c].size() > 1)
        for (std::size_t l = 0; l < cond.clauses[c].size(); ++l)
          if (mask_of(cond, c, l) == mask) return true;
    }
    return false;
  }

  /// Normalizes, dedupes and scores; returns nullptr for seen or oversized
  /// conditions. Beam expansions must also be minimal.
  const Node* add(const Condition& raw, bool neural, bool expansion = false) {
    Condition cond = normalize(raw);
    if (cond.clauses.empty() || cond.clauses.size() > kMaxClauses) return nullptr;
    for (const auto& clause : cond.clauses)
      if (clause.size() > kMaxLiteralsPerClause) return nullptr;
    std::string key = print(cond);
    if (index_.contains(key)) return nullptr;

    Node node;
    node.mask = mask_of(cond);
    if (expansion && redundant(cond, node.mask)) return nullptr;
    node.score = ranker_.logit(node_features(cond, node.mask, features_).values);
    node.neural = neural;
    node.boosted = neural || uses_boosted_term(cond, terms_);
    node.boosted_score = node.boosted ? apply_boost(node.score, cfg_.boost_fraction) : node.score;
    node.cond = std::move(cond);
    node.key = key;
    index_.emplace(std::move(key), nodes_.size());
    nodes_.push_back(std::move(node));
    return &nodes_.back();
  }

  std::vector<std::size_t> top(std::vector<std::size_t> ids, std::size_t width) const {
    std::sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) { return better(nodes_[a], nodes_[b]); });
    if (ids.size() > width) ids.resize(width);
    return ids;
  }

  static bool better(const Node& a, const Node& b) {
    if (a.boosted_score != b.boosted_score) return a.boosted_score > b.boosted_score;
    return a.key < b.key;
  }

  std::deque<Node>& nodes() { return nodes_; }

 private:
  const Table& table_;
  const BeamConfig& cfg_;
  const RankerModel& ranker_;
  const std::set<std::string>& terms_;
  EvalContext eval_;
  FeatureContext features_;
  std::unordered_map<std::string, ExecutionVector> literal_masks_;
  std::unordered_map<std::string, std::size_t> index_;
  std::deque<Node> nodes_;
};

}  // namespace

std::vector<Candidate> beam_synthesize(const std::vector<Predicate>& predicates,
                                       const std::vector<Component>& neural_components, const Table& table,
                                       std::size_t col, const BeamConfig& cfg, const RankerModel& ranker,
                                       const std::set<std::string>& boosted_terms, Date today) {
  if (cfg.beam_width < 1 || cfg.max_depth < 1) throw Error("beam_width and max_depth must be at least 1");
  Search search(table, col, cfg, ranker, boosted_terms, today);

  std::vector<Literal> pool;
  for (const auto& p : predicates) {
    pool.push_back(Literal{p, false});
    if (negatable(p)) pool.push_back(Literal{p, true});
  }

  // components first so a component that repeats a pool literal keeps its origin
  std::vector<std::size_t> level;
  for (const auto& comp : neural_components) {
    auto cond = instantiate(comp, table, col);
    if (!cond) continue;
    const std::size_t before = search.nodes().size();
    if (search.add(*cond, comp.origin == Origin::Neural)) level.push_back(before);
  }
  for (const auto& lit : pool) {
    const std::size_t before = search.nodes().size();
    if (search.add(Condition{{{lit}}}, false)) level.push_back(before);
  }

  for (std::size_t depth = 2; depth <= cfg.max_depth && !level.empty(); ++depth) {
    const std::vector<std::size_t> survivors = search.top(level, cfg.beam_width);
    level.clear();
    for (std::size_t id : survivors) {
      const Condition base = search.nodes()[id].cond;
      const bool neural = search.nodes()[id].neural;
      for (const auto& lit : pool) {
        for (std::size_t i = 0; i < base.clauses.size(); ++i) {
          if (base.clauses[i].size() >= kMaxLiteralsPerClause) continue;
          Condition next = base;
          next.clauses[i].push_back(lit);
          const std::size_t before = search.nodes().size();
          if (search.add(next, neural, true)) level.push_back(before);
        }
        if (base.clauses.size() < kMaxClauses) {
          Condition next = base;
          next.clauses.push_back({lit});
          const std::size_t before = search.nodes().size();
          if (search.add(next, neural, true)) level.push_back(before);
        }
      }
    }
  }

  std::vector<std::size_t> all(search.nodes().size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::vector<Candidate> out;
  for (std::size_t id : search.top(std::move(all), cfg.max_candidates)) {
    Node& n = search.nodes()[id];
    out.push_back(Candidate{std::move(n.cond), n.score, n.boosted_score, n.boosted, n.neural, std::move(n.mask)});
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<Condition> sub_conditions(const Condition& c) {
  std::vector<Condition> out;
  std::unordered_set<std::string> seen;
  auto add = [&](Condition x) {
    Condition n = normalize(x);
    if (seen.insert(print(n)).second) out.push_back(std::move(n));
  };
  add(c);
  for (const auto& clause : c.clauses) {
    if (c.clauses.size() > 1) add(Condition{{clause}});
    for (std::size_t i = 0; i < clause.size(); ++i) {
      add(Condition{{{clause[i]}}});
      for (std::size_t j = i + 1; j < clause.size() && clause.size() > 2; ++j)
        add(Condition{{{clause[i], clause[j]}}});
    }
  }
  return out;
}

namespace {

std::vector<Literal> literal_vocabulary(const TrainingTask& task, std::size_t col) {
  std::vector<Literal> vocab;
  const auto props = extract_properties(task.table, col, kDefaultPropertyK, task.today);
  for (auto& p : enumerate_predicates(props, task.table, col)) {
    if (negatable(p)) vocab.push_back(Literal{p, true});
    vocab.push_back(Literal{std::move(p), false});
  }
  return vocab;
}

/// Literal vocabulary for random negatives on one task: the target column's
/// enumerated predicates, another column's, and cross-column comparisons.
std::vector<Literal> negative_vocabulary(const TrainingTask& task, const std::vector<Literal>& target_vocab,
                                         Rng& rng) {
  std::vector<Literal> vocab = target_vocab;
  if (task.table.n_cols() > 1) {
    std::size_t other = rng.below(task.table.n_cols() - 1);
    if (other >= task.target) ++other;
    for (auto& lit : literal_vocabulary(task, other)) vocab.push_back(std::move(lit));
  }
  std::set<std::string> numeric;
  for (const auto& c : task.table.columns())
    if (c.type == CellType::Numeric) numeric.insert(fold_case(c.header));
  if (numeric.size() >= 2) {
    std::set<std::string> terms = numeric;
    terms.insert("0");
    for (auto& p : enumerate_boosted_predicates(terms, task.table, task.target)) vocab.push_back(Literal{p, false});
  }
  return vocab;
}

/// Random negatives mimic the beam's compound nodes: pairs, deeper
/// conditions and near misses that extend a true sub-condition. Single
/// target literals are covered exhaustively elsewhere.
Condition random_negative(const std::vector<Literal>& target_vocab, const std::vector<Literal>& vocab,
                          const std::vector<Condition>& positives, Rng& rng) {
  // compounds mostly stay on the target column, like the ones the search builds
  auto lit = [&]() -> const Literal& { return rng.coin(0.8) && !target_vocab.empty() ? rng.pick(target_vocab) : rng.pick(vocab); };
  const double r = rng.uniform();
  if (r < 0.1) return Condition{{{rng.pick(vocab)}}};
  if (r < 0.4) {
    const Literal& a = lit();
    const Literal& b = lit();
    return rng.coin() ? Condition{{{a, b}}} : Condition{{{a}, {b}}};
  }
  if (r < 0.75) {
    Condition c = rng.pick(positives);
    if (rng.coin())
      c.clauses.push_back({lit()});
    else
      c.clauses[rng.below(c.clauses.size())].push_back(lit());
    return c;
  }
  const std::size_t n = 3 + rng.below(4);
  Condition c;
  for (std::size_t i = 0; i < n; ++i) {
    if (c.clauses.empty() || rng.coin())
      c.clauses.push_back({lit()});
    else
      c.clauses[rng.below(c.clauses.size())].push_back(lit());
  }
  return c;
}

}  // namespace

TrainingSet build_training_set(const std::vector<TrainingTask>& tasks, const TrainOptions& opts) {
  if (tasks.empty()) throw Error("training corpus is empty");
  if (opts.negatives_per_positive == 0) throw Error("negatives_per_positive must be at least 1");
  Rng rng(opts.seed);
  TrainingSet set;
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& task : tasks) {
    const EvalContext ectx{.today = task.today, .target = task.target};
    const FeatureContext fctx = make_feature_context(task.table, task.target, task.today);
    const ExecutionVector truth_mask = execute(task.truth, task.table, ectx);
    std::unordered_set<std::string> positives;
    std::set<std::string> positive_masks;
    auto emit = [&](const Condition& c, const ExecutionVector& mask, int label) {
      set.x.push_back(node_features(c, mask, fctx).values);
      set.y.push_back(label);
      ++(label ? n_pos : n_neg);
    };
    const std::vector<Condition> subs = sub_conditions(task.truth);
    for (const auto& sub : subs) {
      const ExecutionVector mask = execute(sub, task.table, ectx);
      positives.insert(print(sub));
      positive_masks.insert(mask.to_bitstring());
      emit(sub, mask, 1);
    }
    // Every other target literal is labelled by what it executes to: clusters
    // are scored by their mean, so equivalent spellings of a positive must
    // score like it, and competing literals are the search's real rivals.
    const std::vector<Literal> target_vocab = literal_vocabulary(task, task.target);
    for (const auto& lit : target_vocab) {
      Condition c = normalize(Condition{{{lit}}});
      if (!positives.insert(print(c)).second) continue;
      const ExecutionVector mask = execute(c, task.table, ectx);
      emit(c, mask, positive_masks.contains(mask.to_bitstring()) ? 1 : 0);
    }
    const std::vector<Literal> vocab = negative_vocabulary(task, target_vocab, rng);
    if (vocab.empty()) continue;
    const std::size_t want = subs.size() * opts.negatives_per_positive + target_vocab.size() / 2;
    for (std::size_t made = 0, tries = 0; made < want && tries < want * 20; ++tries) {
      Condition neg = normalize(random_negative(target_vocab, vocab, subs, rng));
      if (positives.contains(print(neg))) continue;
      const ExecutionVector mask = execute(neg, task.table, ectx);
      if (positive_masks.contains(mask.to_bitstring())) continue;
      emit(neg, mask, 0);
      ++made;
    }
  }
  // balance the two classes
  const double pos_w = n_pos ? static_cast<double>(n_neg) / static_cast<double>(n_pos) : 1;
  for (int label : set.y) set.weight.push_back(label ? std::max(1.0, pos_w) : 1.0);
  return set;
}

static void mine_hard_negatives(const std::vector<TrainingTask>& tasks, const RankerModel& model, const TrainOptions& opts,
                         TrainingSet& set) {
  BeamConfig beam;
  beam.max_candidates = opts.hard_negatives_per_task * 4;
  for (const auto& task : tasks) {
    const EvalContext ectx{.today = task.today, .target = task.target};
    const FeatureContext fctx = make_feature_context(task.table, task.target, task.today);
    std::set<std::string> positive_masks;
    for (const auto& sub : sub_conditions(task.truth))
      positive_masks.insert(execute(sub, task.table, ectx).to_bitstring());
    const auto props = extract_properties(task.table, task.target, kDefaultPropertyK, task.today);
    const auto preds = enumerate_predicates(props, task.table, task.target);
    std::size_t taken = 0;
    for (const auto& c : beam_synthesize(preds, {}, task.table, task.target, beam, model, {}, task.today)) {
      if (taken == opts.hard_negatives_per_task) break;
      if (positive_masks.contains(c.mask.to_bitstring())) continue;
      set.x.push_back(node_features(c.condition, c.mask, fctx).values);
      set.y.push_back(0);
      set.weight.push_back(1);
      ++taken;
    }
  }
  // keep the classes balanced after adding negatives
  std::size_t n_pos = 0;
  for (int y : set.y) n_pos += y;
  const double pos_w = n_pos ? static_cast<double>(set.y.size() - n_pos) / static_cast<double>(n_pos) : 1;
  for (std::size_t i = 0; i < set.y.size(); ++i)
    if (set.y[i]) set.weight[i] = std::max(1.0, pos_w);
}

RankerModel train_ranker(const std::vector<TrainingTask>& tasks, const TrainOptions& opts) {
  TrainingSet set = build_training_set(tasks, opts);
  if (set.x.size() < kMinTrainingExamples)
    throw Error("training corpus yields " + std::to_string(set.x.size()) + " examples; at least " +
                std::to_string(kMinTrainingExamples) + " are required");
  MlpConfig mlp = opts.mlp;
  mlp.seed = opts.seed;
  RankerModel model = fit_mlp(set.x, set.y, set.weight, mlp);
  // Hard negatives: what the current scorer wrongly prefers during search.
  for (std::size_t round = 0; round < opts.hard_negative_rounds; ++round) {
    mine_hard_negatives(tasks, model, opts, set);
    model = fit_mlp(set.x, set.y, set.weight, mlp);
  }
  return model;
}

}  // namespace autocf
