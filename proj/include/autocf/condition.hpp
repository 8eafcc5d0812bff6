#pragma once

// Condition language: typed predicates combined in disjunctive normal form.
//
// Surface syntax examples:
//   [@Budget]-[@Cost]>1000
//   TextEquals([@Status], "Incomplete") OR NOT(Blanks([@Owner]))
//   Between([@Score], 10, 20) AND InLastWeek([@Due])
//
// A predicate whose column is omitted (TextEquals("A")) tests the target
// column supplied at evaluation time.

#include <cstddef>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "autocf/table.hpp"

namespace autocf {

inline constexpr std::size_t kMaxClauses = 5;
inline constexpr std::size_t kMaxLiteralsPerClause = 5;
inline constexpr std::size_t kMaxExprDepth = 4;

enum class CmpOp { Gt, Ge, Lt, Le, Eq, Ne };

std::string_view to_string(CmpOp op);
/// The operator with swapped operands: a < b  <=>  b > a.
CmpOp mirror(CmpOp op);

/// Arithmetic over column references and constants.
class NumExpr {
 public:
  enum class Kind { Column, Constant, Add, Sub };

  NumExpr() = default;
  static NumExpr column(std::string header);
  static NumExpr constant(double value);
  static NumExpr add(NumExpr lhs, NumExpr rhs);
  static NumExpr sub(NumExpr lhs, NumExpr rhs);

  Kind kind() const noexcept { return kind_; }
  const std::string& header() const noexcept { return header_; }
  double value() const noexcept { return value_; }
  const NumExpr& lhs() const { return *lhs_; }
  const NumExpr& rhs() const { return *rhs_; }

  std::size_t depth() const;
  bool has_column() const;
  void collect_columns(std::vector<std::string>& out) const;
  void collect_constants(std::vector<double>& out) const;

  bool operator==(const NumExpr& o) const;

 private:
  Kind kind_ = Kind::Constant;
  std::string header_;
  double value_ = 0;
  std::shared_ptr<const NumExpr> lhs_, rhs_;
};

enum class PredKind {
  TextEquals,
  TextStartsWith,
  TextEndsWith,
  TextContains,
  Compare,
  Between,
  DateBefore,
  DateAfter,
  InLastWeek,
  InThisWeek,
  InNextWeek,
  InLastMonth,
  InThisMonth,
  InNextMonth,
  IsToday,
  YearEquals,
  Blanks,
  Duplicates,
  Unique,
  IsError,
  IsNA,
};

/// Which column type a predicate applies to. General predicates accept any.
enum class PredFamily { Text, Numeric, Date, General };

std::string_view to_string(PredKind k);
PredFamily family_of(PredKind k);

struct Predicate {
  PredKind kind = PredKind::Blanks;
  std::string column;  // tested column; empty = target column (not used by Compare/Between)
  std::string text;    // Text* argument
  NumExpr lhs, rhs;    // Compare: lhs op rhs; Between: lhs within [lo, hi]
  CmpOp op = CmpOp::Gt;
  double lo = 0, hi = 0;
  Date date{};
  int year = 0;

  bool operator==(const Predicate& o) const;

  static Predicate text_pred(PredKind kind, std::string column, std::string text);
  static Predicate compare(NumExpr lhs, CmpOp op, NumExpr rhs);
  static Predicate between(NumExpr expr, double lo, double hi);
  static Predicate date_pred(PredKind kind, std::string column, Date d = {});
  static Predicate year_equals(std::string column, int year);
  static Predicate general(PredKind kind, std::string column);
};

struct Literal {
  Predicate pred;
  bool negated = false;

  bool operator==(const Literal&) const = default;
};

using Clause = std::vector<Literal>;

/// Disjunction of conjunctions of literals.
struct Condition {
  std::vector<Clause> clauses;

  bool operator==(const Condition&) const = default;
  std::size_t literal_count() const;
};

Condition single(Literal lit);
Condition single(Predicate pred, bool negated = false);

struct Rule {
  Condition condition;
  Format format;
};

/// Parses surface syntax and converts to DNF (NOT pushed to literals).
/// Throws ParseError, or DnfBoundError when the DNF exceeds the bounds.
Condition parse_condition(std::string_view text);

std::string print(const NumExpr& e);
std::string print(const Predicate& p);
std::string print(const Literal& l);
std::string print(const Condition& c);

/// Canonical form: oriented comparisons, sorted/deduplicated literals and
/// clauses. Execution-preserving and idempotent.
Condition normalize(const Condition& c);

/// Normalized condition with every constant replaced by "<?>".
struct Sketch {
  std::string text;
  bool operator==(const Sketch&) const = default;
  auto operator<=>(const Sketch&) const = default;
};
Sketch sketch(const Condition& c);
/// Per-literal sketches of the normalized condition.
std::set<std::string> predicate_sketches(const Condition& c);
/// Printed constants (numbers canonical, text case-folded, dates ISO).
std::set<std::string> constants_of(const Condition& c);
/// Columns referenced explicitly (original spelling).
std::set<std::string> columns_of(const Condition& c);

struct Complexity {
  std::size_t token_count = 0;
  std::size_t ast_depth = 0;
};
Complexity complexity(const Condition& c);

/// Tokens of the printed form: column refs, constants, names, operators.
std::vector<std::string> tokenize_printed(const Condition& c);

nlohmann::json to_json(const Condition& c);
Condition condition_from_json(const nlohmann::json& j);

}  // namespace autocf
