#include "autocf/evaluate.hpp"

#include <array>
#include <unordered_map>

#include "autocf/error.hpp"

namespace autocf {

using namespace std::chrono;

bool is_error_literal(std::string_view value) {
  static constexpr std::array<std::string_view, 7> kErrors{"#N/A",   "#REF!", "#DIV/0!", "#VALUE!",
                                                          "#NAME?", "#NULL!", "#NUM!"};
  std::string key = trim(value);
  for (auto& c : key) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (auto e : kErrors)
    if (key == e) return true;
  return false;
}

bool is_na_literal(std::string_view value) {
  const std::string key = fold_case(trim(value));
  return key == "na" || key == "n/a";
}

namespace {

std::size_t resolve(const std::string& column, const Table& table, const EvalContext& ctx,
                    const Predicate& pred) {
  if (column.empty()) {
    if (!ctx.target) throw ResolutionError("predicate " + print(pred) + " has no column and no target column is set");
    if (*ctx.target >= table.n_cols())
      throw ResolutionError("target column index " + std::to_string(*ctx.target) + " out of range");
    return *ctx.target;
  }
  if (auto i = table.find_column(column)) return *i;
  throw ResolutionError("unknown column reference [@" + column + "] in " + print(pred));
}

void require_type(const Table& table, std::size_t col, CellType want, const Predicate& pred) {
  const auto& c = table.column(col);
  if (c.type != want)
    throw TypeMismatchError("predicate " + print(pred) + " needs a " + std::string(to_string(want)) +
                            " column but '" + c.header + "' is " + std::string(to_string(c.type)));
}

void check_expr(const NumExpr& e, const Table& table, const EvalContext& ctx, const Predicate& pred) {
  std::vector<std::string> cols;
  e.collect_columns(cols);
  for (const auto& name : cols) require_type(table, resolve(name, table, ctx, pred), CellType::Numeric, pred);
}

void check_predicate(const Predicate& p, const Table& table, const EvalContext& ctx) {
  switch (family_of(p.kind)) {
    case PredFamily::Text: require_type(table, resolve(p.column, table, ctx, p), CellType::Text, p); return;
    case PredFamily::Date: require_type(table, resolve(p.column, table, ctx, p), CellType::Date, p); return;
    case PredFamily::General: resolve(p.column, table, ctx, p); return;
    case PredFamily::Numeric:
      check_expr(p.lhs, table, ctx, p);
      if (p.kind == PredKind::Compare) check_expr(p.rhs, table, ctx, p);
      return;
  }
}

Date week_start(Date d) {
  const unsigned iso = weekday{d}.iso_encoding();  // Mon = 1 .. Sun = 7
  return d - days{iso - 1};
}

year_month month_of(Date d) {
  const year_month_day ymd{d};
  return ymd.year() / ymd.month();
}

std::optional<double> eval_expr(const NumExpr& e, const Table& table, std::size_t row,
                                const EvalContext& ctx, const Predicate& pred) {
  switch (e.kind()) {
    case NumExpr::Kind::Constant: return e.value();
    case NumExpr::Kind::Column: {
      const auto& cell = table.cell(resolve(e.header(), table, ctx, pred), row);
      if (cell.ctype != CellType::Numeric || cell.blank()) return std::nullopt;
      return std::get<double>(cell.parsed);
    }
    default: {
      auto l = eval_expr(e.lhs(), table, row, ctx, pred);
      if (!l) return std::nullopt;
      auto r = eval_expr(e.rhs(), table, row, ctx, pred);
      if (!r) return std::nullopt;
      return e.kind() == NumExpr::Kind::Add ? *l + *r : *l - *r;
    }
  }
}

bool compare(double l, CmpOp op, double r) {
  switch (op) {
    case CmpOp::Gt: return l > r;
    case CmpOp::Ge: return l >= r;
    case CmpOp::Lt: return l < r;
    case CmpOp::Le: return l <= r;
    case CmpOp::Eq: return l == r;
    case CmpOp::Ne: return l != r;
  }
  return false;
}

/// Occurrence counts of case-folded, trimmed non-blank values.
std::unordered_map<std::string, std::size_t> value_counts(const Column& col) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& cell : col.cells)
    if (!cell.blank()) ++counts[fold_case(trim(cell.value))];
  return counts;
}

/// Row-level predicate semantics. `counts` is only consulted by
/// Duplicates/Unique and must be value_counts() of the tested column.
bool holds(const Predicate& p, const Table& table, std::size_t row, const EvalContext& ctx,
           const std::unordered_map<std::string, std::size_t>* counts) {
  if (p.kind == PredKind::Compare) {
    auto l = eval_expr(p.lhs, table, row, ctx, p);
    if (!l) return false;
    auto r = eval_expr(p.rhs, table, row, ctx, p);
    return r && compare(*l, p.op, *r);
  }
  if (p.kind == PredKind::Between) {
    auto v = eval_expr(p.lhs, table, row, ctx, p);
    return v && p.lo <= *v && *v <= p.hi;
  }

  const std::size_t col = resolve(p.column, table, ctx, p);
  const Cell& cell = table.cell(col, row);
  if (p.kind == PredKind::Blanks) return cell.blank();
  if (cell.blank()) return false;

  switch (family_of(p.kind)) {
    case PredFamily::Text: {
      if (cell.ctype != CellType::Text) return false;
      const std::string value = fold_case(trim(cell.value));
      const std::string arg = fold_case(trim(p.text));
      switch (p.kind) {
        case PredKind::TextEquals: return value == arg;
        case PredKind::TextStartsWith: return value.starts_with(arg);
        case PredKind::TextEndsWith: return value.ends_with(arg);
        default: return value.find(arg) != std::string::npos;
      }
    }
    case PredFamily::Date: {
      if (cell.ctype != CellType::Date) return false;
      const Date d = std::get<Date>(cell.parsed);
      switch (p.kind) {
        case PredKind::DateBefore: return d < p.date;
        case PredKind::DateAfter: return d > p.date;
        case PredKind::InLastWeek: return week_start(d) == week_start(ctx.today) - days{7};
        case PredKind::InThisWeek: return week_start(d) == week_start(ctx.today);
        case PredKind::InNextWeek: return week_start(d) == week_start(ctx.today) + days{7};
        case PredKind::InLastMonth: return month_of(d) == month_of(ctx.today) - months{1};
        case PredKind::InThisMonth: return month_of(d) == month_of(ctx.today);
        case PredKind::InNextMonth: return month_of(d) == month_of(ctx.today) + months{1};
        case PredKind::IsToday: return d == ctx.today;
        case PredKind::YearEquals: return static_cast<int>(year_month_day{d}.year()) == p.year;
        default: return false;
      }
    }
    default: break;
  }
  switch (p.kind) {
    case PredKind::Duplicates: return counts->at(fold_case(trim(cell.value))) > 1;
    case PredKind::Unique: return counts->at(fold_case(trim(cell.value))) == 1;
    case PredKind::IsError: return is_error_literal(cell.value);
    case PredKind::IsNA: return is_na_literal(cell.value);
    default: return false;
  }
}

bool needs_counts(const Predicate& p) {
  return p.kind == PredKind::Duplicates || p.kind == PredKind::Unique;
}

}  // namespace

void type_check(const Condition& cond, const Table& table, const EvalContext& ctx) {
  for (const auto& clause : cond.clauses)
    for (const auto& lit : clause) check_predicate(lit.pred, table, ctx);
}

ExecutionVector predicate_mask(const Predicate& pred, const Table& table, const EvalContext& ctx) {
  check_predicate(pred, table, ctx);
  std::unordered_map<std::string, std::size_t> counts;
  if (needs_counts(pred)) counts = value_counts(table.column(resolve(pred.column, table, ctx, pred)));
  ExecutionVector out(table.n_rows());
  for (std::size_t r = 0; r < table.n_rows(); ++r)
    if (holds(pred, table, r, ctx, &counts)) out.set(r);
  return out;
}

ExecutionVector literal_mask(const Literal& lit, const Table& table, const EvalContext& ctx) {
  auto m = predicate_mask(lit.pred, table, ctx);
  return lit.negated ? ~m : m;
}

ExecutionVector execute(const Condition& cond, const Table& table, const EvalContext& ctx) {
  type_check(cond, table, ctx);
  ExecutionVector out(table.n_rows());
  for (const auto& clause : cond.clauses) {
    ExecutionVector acc(table.n_rows(), true);
    for (const auto& lit : clause) acc &= literal_mask(lit, table, ctx);
    out |= acc;
  }
  return out;
}

bool evaluate(const Condition& cond, const Table& table, std::size_t row, const EvalContext& ctx) {
  type_check(cond, table, ctx);
  for (const auto& clause : cond.clauses) {
    bool all = true;
    for (const auto& lit : clause) {
      std::unordered_map<std::string, std::size_t> counts;
      if (needs_counts(lit.pred))
        counts = value_counts(table.column(resolve(lit.pred.column, table, ctx, lit.pred)));
      if (holds(lit.pred, table, row, ctx, &counts) == lit.negated) {
        all = false;
        break;
      }
    }
    if (all) return true;
  }
  return false;
}

Table apply_rule(const Table& table, std::size_t target, const Rule& rule, const EvalContext& ctx) {
  if (target >= table.n_cols()) throw ResolutionError("target column index out of range");
  EvalContext local = ctx;
  if (!local.target) local.target = target;
  const auto mask = execute(rule.condition, table, local);
  Table out = table;
  auto& cells = out.mutable_column(target).cells;
  for (std::size_t r = 0; r < cells.size(); ++r)
    if (mask.test(r)) cells[r].format = merge(cells[r].format, rule.format);
  return out;
}

}  // namespace autocf
