#pragma once

#include <cstddef>
#include <optional>

#include "autocf/condition.hpp"
#include "autocf/execution_vector.hpp"
#include "autocf/table.hpp"

namespace autocf {

/// What a condition is evaluated against besides the table itself.
struct EvalContext {
  Date today{};                       // reference date for relative date predicates
  std::optional<std::size_t> target;  // column for predicates without [@Column]
};

/// Checks that every reference resolves and every predicate matches its
/// column type. Throws ResolutionError / TypeMismatchError.
void type_check(const Condition& cond, const Table& table, const EvalContext& ctx);

/// Rows where the (un-negated) predicate holds. Type-checks first.
ExecutionVector predicate_mask(const Predicate& pred, const Table& table, const EvalContext& ctx);
ExecutionVector literal_mask(const Literal& lit, const Table& table, const EvalContext& ctx);

/// Row mask of the whole condition.
ExecutionVector execute(const Condition& cond, const Table& table, const EvalContext& ctx);

/// Single-row evaluation; agrees with execute().
bool evaluate(const Condition& cond, const Table& table, std::size_t row, const EvalContext& ctx);

/// Merges rule.format over the target-column cells whose row satisfies the
/// condition. Returns a new table; the input is not modified.
Table apply_rule(const Table& table, std::size_t target, const Rule& rule, const EvalContext& ctx);

/// True when the raw cell text is a spreadsheet error literal (#N/A, #REF!, ...).
bool is_error_literal(std::string_view value);
/// NA / N/A, case-insensitive.
bool is_na_literal(std::string_view value);

}  // namespace autocf
