#include "autocf/condition.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <optional>

#include "autocf/error.hpp"

namespace autocf {

using nlohmann::json;

// --- operators and names ---------------------------------------------------

std::string_view to_string(CmpOp op) {
  switch (op) {
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Eq: return "=";
    case CmpOp::Ne: return "<>";
  }
  return "=";
}

CmpOp mirror(CmpOp op) {
  switch (op) {
    case CmpOp::Gt: return CmpOp::Lt;
    case CmpOp::Ge: return CmpOp::Le;
    case CmpOp::Lt: return CmpOp::Gt;
    case CmpOp::Le: return CmpOp::Ge;
    default: return op;
  }
}

namespace {

struct KindInfo {
  PredKind kind;
  std::string_view name;
  PredFamily family;
};

constexpr std::array<KindInfo, 21> kKinds{{
    {PredKind::TextEquals, "TextEquals", PredFamily::Text},
    {PredKind::TextStartsWith, "TextStartsWith", PredFamily::Text},
    {PredKind::TextEndsWith, "TextEndsWith", PredFamily::Text},
    {PredKind::TextContains, "TextContains", PredFamily::Text},
    {PredKind::Compare, "Compare", PredFamily::Numeric},
    {PredKind::Between, "Between", PredFamily::Numeric},
    {PredKind::DateBefore, "DateBefore", PredFamily::Date},
    {PredKind::DateAfter, "DateAfter", PredFamily::Date},
    {PredKind::InLastWeek, "InLastWeek", PredFamily::Date},
    {PredKind::InThisWeek, "InThisWeek", PredFamily::Date},
    {PredKind::InNextWeek, "InNextWeek", PredFamily::Date},
    {PredKind::InLastMonth, "InLastMonth", PredFamily::Date},
    {PredKind::InThisMonth, "InThisMonth", PredFamily::Date},
    {PredKind::InNextMonth, "InNextMonth", PredFamily::Date},
    {PredKind::IsToday, "IsToday", PredFamily::Date},
    {PredKind::YearEquals, "YearEquals", PredFamily::Date},
    {PredKind::Blanks, "Blanks", PredFamily::General},
    {PredKind::Duplicates, "Duplicates", PredFamily::General},
    {PredKind::Unique, "Unique", PredFamily::General},
    {PredKind::IsError, "IsError", PredFamily::General},
    {PredKind::IsNA, "IsNA", PredFamily::General},
}};

std::optional<PredKind> kind_from_name(std::string_view name) {
  const std::string folded = fold_case(name);
  for (const auto& info : kKinds)
    if (info.kind != PredKind::Compare && fold_case(info.name) == folded) return info.kind;
  return std::nullopt;
}

bool is_text(PredKind k) { return family_of(k) == PredFamily::Text; }

bool is_date_window(PredKind k) {
  switch (k) {
    case PredKind::InLastWeek:
    case PredKind::InThisWeek:
    case PredKind::InNextWeek:
    case PredKind::InLastMonth:
    case PredKind::InThisMonth:
    case PredKind::InNextMonth:
    case PredKind::IsToday:
      return true;
    default:
      return false;
  }
}

}  // namespace

std::string_view to_string(PredKind k) {
  for (const auto& info : kKinds)
    if (info.kind == k) return info.name;
  return "?";
}

PredFamily family_of(PredKind k) {
  for (const auto& info : kKinds)
    if (info.kind == k) return info.family;
  return PredFamily::General;
}

// --- NumExpr ---------------------------------------------------------------

NumExpr NumExpr::column(std::string header) {
  NumExpr e;
  e.kind_ = Kind::Column;
  e.header_ = std::move(header);
  return e;
}

NumExpr NumExpr::constant(double value) {
  NumExpr e;
  e.kind_ = Kind::Constant;
  e.value_ = value;
  return e;
}

NumExpr NumExpr::add(NumExpr lhs, NumExpr rhs) {
  NumExpr e;
  e.kind_ = Kind::Add;
  e.lhs_ = std::make_shared<const NumExpr>(std::move(lhs));
  e.rhs_ = std::make_shared<const NumExpr>(std::move(rhs));
  return e;
}

NumExpr NumExpr::sub(NumExpr lhs, NumExpr rhs) {
  NumExpr e = add(std::move(lhs), std::move(rhs));
  e.kind_ = Kind::Sub;
  return e;
}

std::size_t NumExpr::depth() const {
  if (kind_ == Kind::Column || kind_ == Kind::Constant) return 1;
  return 1 + std::max(lhs_->depth(), rhs_->depth());
}

bool NumExpr::has_column() const {
  if (kind_ == Kind::Column) return true;
  if (kind_ == Kind::Constant) return false;
  return lhs_->has_column() || rhs_->has_column();
}

void NumExpr::collect_columns(std::vector<std::string>& out) const {
  if (kind_ == Kind::Column) {
    out.push_back(header_);
  } else if (kind_ != Kind::Constant) {
    lhs_->collect_columns(out);
    rhs_->collect_columns(out);
  }
}

void NumExpr::collect_constants(std::vector<double>& out) const {
  if (kind_ == Kind::Constant) {
    out.push_back(value_);
  } else if (kind_ != Kind::Column) {
    lhs_->collect_constants(out);
    rhs_->collect_constants(out);
  }
}

bool NumExpr::operator==(const NumExpr& o) const {
  if (kind_ != o.kind_) return false;
  switch (kind_) {
    case Kind::Column: return header_ == o.header_;
    case Kind::Constant: return value_ == o.value_;
    default: return *lhs_ == *o.lhs_ && *rhs_ == *o.rhs_;
  }
}

// --- Predicate -------------------------------------------------------------

bool Predicate::operator==(const Predicate& o) const {
  if (kind != o.kind) return false;
  switch (kind) {
    case PredKind::Compare: return op == o.op && lhs == o.lhs && rhs == o.rhs;
    case PredKind::Between: return lhs == o.lhs && lo == o.lo && hi == o.hi;
    case PredKind::TextEquals:
    case PredKind::TextStartsWith:
    case PredKind::TextEndsWith:
    case PredKind::TextContains: return column == o.column && text == o.text;
    case PredKind::DateBefore:
    case PredKind::DateAfter: return column == o.column && date == o.date;
    case PredKind::YearEquals: return column == o.column && year == o.year;
    default: return column == o.column;
  }
}

Predicate Predicate::text_pred(PredKind kind, std::string column, std::string text) {
  Predicate p;
  p.kind = kind;
  p.column = std::move(column);
  p.text = std::move(text);
  return p;
}

Predicate Predicate::compare(NumExpr lhs, CmpOp op, NumExpr rhs) {
  Predicate p;
  p.kind = PredKind::Compare;
  p.lhs = std::move(lhs);
  p.op = op;
  p.rhs = std::move(rhs);
  return p;
}

Predicate Predicate::between(NumExpr expr, double lo, double hi) {
  Predicate p;
  p.kind = PredKind::Between;
  p.lhs = std::move(expr);
  p.lo = lo;
  p.hi = hi;
  return p;
}

Predicate Predicate::date_pred(PredKind kind, std::string column, Date d) {
  Predicate p;
  p.kind = kind;
  p.column = std::move(column);
  p.date = d;
  return p;
}

Predicate Predicate::year_equals(std::string column, int year) {
  Predicate p;
  p.kind = PredKind::YearEquals;
  p.column = std::move(column);
  p.year = year;
  return p;
}

Predicate Predicate::general(PredKind kind, std::string column) {
  Predicate p;
  p.kind = kind;
  p.column = std::move(column);
  return p;
}

std::size_t Condition::literal_count() const {
  std::size_t n = 0;
  for (const auto& c : clauses) n += c.size();
  return n;
}

Condition single(Literal lit) { return Condition{{Clause{std::move(lit)}}}; }
Condition single(Predicate pred, bool negated) {
  return single(Literal{std::move(pred), negated});
}

// --- printing --------------------------------------------------------------

namespace {

constexpr std::string_view kHole = "<?>";

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

std::string print_expr(const NumExpr& e, bool holes) {
  switch (e.kind()) {
    case NumExpr::Kind::Column: return "[@" + e.header() + "]";
    case NumExpr::Kind::Constant: return holes ? std::string(kHole) : format_number(e.value());
    default: {
      std::string rhs = print_expr(e.rhs(), holes);
      if (e.rhs().kind() == NumExpr::Kind::Add || e.rhs().kind() == NumExpr::Kind::Sub)
        rhs = "(" + rhs + ")";
      return print_expr(e.lhs(), holes) + (e.kind() == NumExpr::Kind::Add ? "+" : "-") + rhs;
    }
  }
}

std::string print_pred(const Predicate& p, bool holes) {
  if (p.kind == PredKind::Compare)
    return print_expr(p.lhs, holes) + std::string(to_string(p.op)) + print_expr(p.rhs, holes);

  std::vector<std::string> args;
  if (p.kind == PredKind::Between) {
    args.push_back(print_expr(p.lhs, holes));
    args.push_back(holes ? std::string(kHole) : format_number(p.lo));
    args.push_back(holes ? std::string(kHole) : format_number(p.hi));
  } else {
    if (!p.column.empty()) args.push_back("[@" + p.column + "]");
    if (is_text(p.kind)) args.push_back(holes ? std::string(kHole) : quote(p.text));
    if (p.kind == PredKind::DateBefore || p.kind == PredKind::DateAfter)
      args.push_back(holes ? std::string(kHole) : format_date(p.date));
    if (p.kind == PredKind::YearEquals)
      args.push_back(holes ? std::string(kHole) : std::to_string(p.year));
  }
  std::string out(to_string(p.kind));
  out += '(';
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += ", ";
    out += args[i];
  }
  out += ')';
  return out;
}

std::string print_literal(const Literal& l, bool holes) {
  std::string body = print_pred(l.pred, holes);
  return l.negated ? "NOT(" + body + ")" : body;
}

std::string print_clause(const Clause& c, bool holes) {
  std::string out;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (i) out += " AND ";
    out += print_literal(c[i], holes);
  }
  return out;
}

std::string print_condition(const Condition& c, bool holes) {
  if (c.clauses.size() == 1) return print_clause(c.clauses.front(), holes);
  std::string out;
  for (std::size_t i = 0; i < c.clauses.size(); ++i) {
    if (i) out += " OR ";
    if (c.clauses[i].size() > 1)
      out += "(" + print_clause(c.clauses[i], holes) + ")";
    else
      out += print_clause(c.clauses[i], holes);
  }
  return out;
}

}  // namespace

std::string print(const NumExpr& e) { return print_expr(e, false); }
std::string print(const Predicate& p) { return print_pred(p, false); }
std::string print(const Literal& l) { return print_literal(l, false); }
std::string print(const Condition& c) { return print_condition(c, false); }

// --- lexer -----------------------------------------------------------------

namespace {

enum class Tok {
  ColRef,
  String,
  Number,
  Date,
  Word,  // identifier or bare word such as 00C
  LParen,
  RParen,
  Comma,
  Plus,
  Minus,
  Cmp,
  End,
};

struct Token {
  Tok type;
  std::string text;  // decoded payload
  std::size_t pos;
  double number = 0;
  CmpOp op = CmpOp::Eq;
};

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' ||
         static_cast<unsigned char>(c) >= 0x80;
}

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (s.substr(i, 2) == "[@") {
      std::size_t close = s.find(']', i + 2);
      if (close == std::string_view::npos) throw ParseError("unterminated column reference", i);
      std::string header = trim(s.substr(i + 2, close - i - 2));
      if (header.empty()) throw ParseError("empty column reference", i);
      out.push_back({Tok::ColRef, header, start});
      i = close + 1;
      continue;
    }
    if (c == '"') {
      std::string text;
      ++i;
      bool closed = false;
      while (i < s.size()) {
        if (s[i] == '\\' && i + 1 < s.size()) {
          text += s[i + 1];
          i += 2;
        } else if (s[i] == '"') {
          closed = true;
          ++i;
          break;
        } else {
          text += s[i++];
        }
      }
      if (!closed) throw ParseError("unterminated string literal", start);
      out.push_back({Tok::String, text, start});
      continue;
    }
    switch (c) {
      case '(': out.push_back({Tok::LParen, "(", start}); ++i; continue;
      case ')': out.push_back({Tok::RParen, ")", start}); ++i; continue;
      case ',': out.push_back({Tok::Comma, ",", start}); ++i; continue;
      case '+': out.push_back({Tok::Plus, "+", start}); ++i; continue;
      case '-': out.push_back({Tok::Minus, "-", start}); ++i; continue;
      default: break;
    }
    // comparison operators
    {
      struct OpSpelling {
        std::string_view text;
        CmpOp op;
      };
      static constexpr std::array<OpSpelling, 11> kOps{{
          {">=", CmpOp::Ge},
          {"<=", CmpOp::Le},
          {"<>", CmpOp::Ne},
          {"!=", CmpOp::Ne},
          {"==", CmpOp::Eq},
          {"\xE2\x89\xA5", CmpOp::Ge},
          {"\xE2\x89\xA4", CmpOp::Le},
          {"\xE2\x89\xA0", CmpOp::Ne},
          {">", CmpOp::Gt},
          {"<", CmpOp::Lt},
          {"=", CmpOp::Eq},
      }};
      bool matched = false;
      for (const auto& spelling : kOps) {
        if (s.substr(i).starts_with(spelling.text)) {
          Token t{Tok::Cmp, std::string(spelling.text), start};
          t.op = spelling.op;
          out.push_back(t);
          i += spelling.text.size();
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }
    if (is_word_char(c)) {
      std::size_t j = i;
      // date literal: YYYY-MM-DD or YYYY/MM/DD
      if (s.size() - i >= 8) {
        std::size_t k = i;
        while (k < s.size() && (std::isdigit(static_cast<unsigned char>(s[k])) || s[k] == '-' ||
                                s[k] == '/'))
          ++k;
        if (auto d = parse_date(s.substr(i, k - i));
            d && std::isdigit(static_cast<unsigned char>(s[i])) && s.substr(i, k - i).size() >= 8 &&
            (s[i + 4] == '-' || s[i + 4] == '/')) {
          Token t{Tok::Date, std::string(s.substr(i, k - i)), start};
          out.push_back(t);
          i = k;
          continue;
        }
      }
      // number
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        double v = 0;
        auto [ptr, ec] = std::from_chars(s.data() + i, s.data() + s.size(), v);
        if (ec == std::errc()) {
          std::size_t end = static_cast<std::size_t>(ptr - s.data());
          if (end >= s.size() || !is_word_char(s[end])) {
            Token t{Tok::Number, std::string(s.substr(i, end - i)), start};
            t.number = v;
            out.push_back(t);
            i = end;
            continue;
          }
        }
      }
      while (j < s.size() && is_word_char(s[j])) ++j;
      out.push_back({Tok::Word, std::string(s.substr(i, j - i)), start});
      i = j;
      continue;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", i);
  }
  out.push_back({Tok::End, "", s.size()});
  return out;
}

// --- parser ----------------------------------------------------------------

struct BoolNode {
  enum class Kind { Lit, And, Or, Not } kind = Kind::Lit;
  Predicate pred;
  std::vector<BoolNode> kids;
};

bool is_keyword(const Token& t, std::string_view kw) {
  return t.type == Tok::Word && fold_case(t.text) == fold_case(kw);
}

class Parser {
 public:
  explicit Parser(std::string_view text) : tokens_(lex(text)) {}

  BoolNode parse() {
    BoolNode n = parse_or();
    if (peek().type != Tok::End) fail("unexpected '" + peek().text + "'");
    return n;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }
  const Token& next() { return tokens_[std::min(pos_++, tokens_.size() - 1)]; }
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, peek().pos); }
  void expect(Tok t, std::string_view what) {
    if (peek().type != t) fail("expected " + std::string(what));
    ++pos_;
  }

  BoolNode parse_or() {
    BoolNode first = parse_and();
    if (!is_keyword(peek(), "OR")) return first;
    BoolNode n{BoolNode::Kind::Or, {}, {std::move(first)}};
    while (is_keyword(peek(), "OR")) {
      ++pos_;
      n.kids.push_back(parse_and());
    }
    return n;
  }

  BoolNode parse_and() {
    BoolNode first = parse_unary();
    if (!is_keyword(peek(), "AND")) return first;
    BoolNode n{BoolNode::Kind::And, {}, {std::move(first)}};
    while (is_keyword(peek(), "AND")) {
      ++pos_;
      n.kids.push_back(parse_unary());
    }
    return n;
  }

  BoolNode parse_unary() {
    if (is_keyword(peek(), "NOT")) {
      ++pos_;
      return BoolNode{BoolNode::Kind::Not, {}, {parse_unary()}};
    }
    return parse_primary();
  }

  BoolNode parse_primary() {
    const Token& t = peek();
    if (t.type == Tok::LParen) {
      // either a parenthesised boolean expression or a comparison whose
      // left operand starts with '('
      const std::size_t saved = pos_;
      std::optional<ParseError> comparison_error;
      try {
        return lit(parse_comparison());
      } catch (const ParseError& e) {
        comparison_error = e;
        pos_ = saved;
      }
      try {
        ++pos_;
        BoolNode inner = parse_or();
        expect(Tok::RParen, "')'");
        return inner;
      } catch (const ParseError& e) {
        throw e.position() >= comparison_error->position() ? e : *comparison_error;
      }
    }
    if (t.type == Tok::Word && peek(1).type == Tok::LParen) {
      auto kind = kind_from_name(t.text);
      if (!kind) fail("unknown predicate '" + t.text + "'");
      ++pos_;
      return lit(parse_call(*kind, t.text));
    }
    return lit(parse_comparison());
  }

  static BoolNode lit(Predicate p) { return BoolNode{BoolNode::Kind::Lit, std::move(p), {}}; }

  Predicate parse_comparison() {
    NumExpr lhs = parse_expr();
    if (peek().type != Tok::Cmp) fail("expected comparison operator");
    CmpOp op = next().op;
    NumExpr rhs = parse_expr();
    return Predicate::compare(std::move(lhs), op, std::move(rhs));
  }

  NumExpr parse_expr() {
    const std::size_t start = peek().pos;
    NumExpr e = parse_term();
    while (peek().type == Tok::Plus || peek().type == Tok::Minus) {
      const bool plus = next().type == Tok::Plus;
      NumExpr rhs = parse_term();
      e = plus ? NumExpr::add(std::move(e), std::move(rhs)) : NumExpr::sub(std::move(e), std::move(rhs));
    }
    if (e.depth() > kMaxExprDepth)
      throw ParseError("arithmetic expression deeper than " + std::to_string(kMaxExprDepth), start);
    return e;
  }

  NumExpr parse_term() {
    const Token& t = peek();
    switch (t.type) {
      case Tok::ColRef: ++pos_; return NumExpr::column(t.text);
      case Tok::Number: ++pos_; return NumExpr::constant(t.number);
      case Tok::Minus:
        if (peek(1).type == Tok::Number) {
          pos_ += 2;
          return NumExpr::constant(-tokens_[pos_ - 1].number);
        }
        fail("expected number after '-'");
      case Tok::Plus:
        if (peek(1).type == Tok::Number) {
          pos_ += 2;
          return NumExpr::constant(tokens_[pos_ - 1].number);
        }
        fail("expected number after '+'");
      case Tok::LParen: {
        ++pos_;
        NumExpr e = parse_expr();
        expect(Tok::RParen, "')'");
        return e;
      }
      default: fail("expected column reference or number");
    }
  }

  struct Arg {
    Token token;
    std::optional<NumExpr> expr;
  };

  std::optional<double> signed_number() {
    bool neg = false;
    if (peek().type == Tok::Minus || peek().type == Tok::Plus) {
      neg = peek().type == Tok::Minus;
      if (peek(1).type != Tok::Number) return std::nullopt;
      ++pos_;
    }
    if (peek().type != Tok::Number) return std::nullopt;
    double v = next().number;
    return neg ? -v : v;
  }

  Predicate parse_call(PredKind kind, const std::string& name) {
    const std::size_t call_pos = peek().pos;
    expect(Tok::LParen, "'('");
    auto arity_error = [&](std::string_view expected) {
      throw ParseError(name + " expects " + std::string(expected), call_pos);
    };

    if (kind == PredKind::Between) {
      NumExpr e = parse_expr();
      expect(Tok::Comma, "','");
      auto lo = signed_number();
      if (!lo) fail("Between bounds must be numbers");
      expect(Tok::Comma, "','");
      auto hi = signed_number();
      if (!hi) fail("Between bounds must be numbers");
      if (peek().type != Tok::RParen) arity_error("(expression, low, high)");
      ++pos_;
      return Predicate::between(std::move(e), *lo, *hi);
    }

    std::vector<Token> args;
    if (peek().type != Tok::RParen) {
      while (true) {
        if (peek().type == Tok::Minus && peek(1).type == Tok::Number) {
          Token t = next();
          t.type = Tok::Number;
          t.number = -next().number;
          t.text = "-" + tokens_[pos_ - 1].text;
          args.push_back(t);
        } else {
          const Token& a = peek();
          if (a.type != Tok::ColRef && a.type != Tok::String && a.type != Tok::Number &&
              a.type != Tok::Date && a.type != Tok::Word)
            fail("unexpected '" + a.text + "' in argument list");
          args.push_back(next());
        }
        if (peek().type == Tok::Comma) {
          ++pos_;
          continue;
        }
        break;
      }
    }
    if (peek().type != Tok::RParen) fail("expected ')'");
    ++pos_;

    std::string column;
    std::size_t first = 0;
    if (!args.empty() && args.front().type == Tok::ColRef) {
      column = args.front().text;
      first = 1;
    }
    const std::size_t rest = args.size() - first;
    if (first == 0 && !args.empty() &&
        std::any_of(args.begin() + 1, args.end(), [](const Token& a) { return a.type == Tok::ColRef; }))
      arity_error("the column reference as its first argument");

    if (is_text(kind)) {
      if (rest != 1) arity_error("([@Column], text) or (text)");
      const Token& a = args[first];
      if (a.type == Tok::ColRef) arity_error("a text argument");
      return Predicate::text_pred(kind, column, a.text);
    }
    if (kind == PredKind::DateBefore || kind == PredKind::DateAfter) {
      if (rest != 1) arity_error("([@Column], date) or (date)");
      auto d = parse_date(args[first].text);
      if (!d) throw ParseError("invalid date '" + args[first].text + "'", args[first].pos);
      return Predicate::date_pred(kind, column, *d);
    }
    if (kind == PredKind::YearEquals) {
      if (rest != 1 || args[first].type != Tok::Number) arity_error("([@Column], year) or (year)");
      return Predicate::year_equals(column, static_cast<int>(args[first].number));
    }
    if (rest != 0) arity_error("at most a column reference");
    if (is_date_window(kind)) return Predicate::date_pred(kind, column);
    return Predicate::general(kind, column);
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

// --- DNF -------------------------------------------------------------------

constexpr std::size_t kMaxIntermediateClauses = 1024;

void dedupe(Clause& c) {
  Clause out;
  for (auto& l : c)
    if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(std::move(l));
  c = std::move(out);
}

std::vector<Clause> to_dnf(const BoolNode& n, bool negated) {
  using K = BoolNode::Kind;
  switch (n.kind) {
    case K::Lit: return {Clause{Literal{n.pred, negated}}};
    case K::Not: return to_dnf(n.kids.front(), !negated);
    case K::And:
    case K::Or: {
      const bool conjunction = (n.kind == K::And) != negated;
      if (!conjunction) {
        std::vector<Clause> out;
        for (const auto& k : n.kids) {
          auto part = to_dnf(k, negated);
          out.insert(out.end(), part.begin(), part.end());
          if (out.size() > kMaxIntermediateClauses)
            throw DnfBoundError("condition expands to too many clauses");
        }
        return out;
      }
      std::vector<Clause> acc{Clause{}};
      for (const auto& k : n.kids) {
        auto part = to_dnf(k, negated);
        std::vector<Clause> next;
        for (const auto& a : acc) {
          for (const auto& b : part) {
            Clause c = a;
            c.insert(c.end(), b.begin(), b.end());
            dedupe(c);
            next.push_back(std::move(c));
            if (next.size() > kMaxIntermediateClauses)
              throw DnfBoundError("condition expands to too many clauses");
          }
        }
        acc = std::move(next);
      }
      return acc;
    }
  }
  return {};
}

}  // namespace

Condition parse_condition(std::string_view text) {
  Parser parser(text);
  BoolNode ast = parser.parse();
  Condition c;
  for (auto& clause : to_dnf(ast, false)) {
    dedupe(clause);
    if (std::find(c.clauses.begin(), c.clauses.end(), clause) == c.clauses.end())
      c.clauses.push_back(std::move(clause));
  }
  if (c.clauses.size() > kMaxClauses)
    throw DnfBoundError("condition has " + std::to_string(c.clauses.size()) +
                        " clauses in DNF; at most " + std::to_string(kMaxClauses) + " allowed");
  for (const auto& clause : c.clauses)
    if (clause.size() > kMaxLiteralsPerClause)
      throw DnfBoundError("a DNF clause has " + std::to_string(clause.size()) +
                          " literals; at most " + std::to_string(kMaxLiteralsPerClause) +
                          " allowed");
  return c;
}

// --- normalization ---------------------------------------------------------

namespace {

NumExpr normalize_expr(const NumExpr& e) {
  switch (e.kind()) {
    case NumExpr::Kind::Column:
    case NumExpr::Kind::Constant: return e;
    case NumExpr::Kind::Sub: return NumExpr::sub(normalize_expr(e.lhs()), normalize_expr(e.rhs()));
    case NumExpr::Kind::Add: {
      NumExpr l = normalize_expr(e.lhs()), r = normalize_expr(e.rhs());
      const auto key = [](const NumExpr& x) { return std::pair{!x.has_column(), print(x)}; };
      if (key(r) < key(l)) std::swap(l, r);
      return NumExpr::add(std::move(l), std::move(r));
    }
  }
  return e;
}

Predicate normalize_pred(const Predicate& p) {
  Predicate out = p;
  if (p.kind == PredKind::Between) {
    out.lhs = normalize_expr(p.lhs);
    return out;
  }
  if (p.kind != PredKind::Compare) return out;
  out.lhs = normalize_expr(p.lhs);
  out.rhs = normalize_expr(p.rhs);
  const bool lcol = out.lhs.has_column(), rcol = out.rhs.has_column();
  bool swap = false;
  if (!lcol && rcol) {
    swap = true;
  } else if (lcol == rcol) {
    if (out.op == CmpOp::Lt || out.op == CmpOp::Le)
      swap = true;
    else if ((out.op == CmpOp::Eq || out.op == CmpOp::Ne) && print(out.rhs) < print(out.lhs))
      swap = true;
  }
  if (swap) {
    std::swap(out.lhs, out.rhs);
    out.op = mirror(out.op);
  }
  return out;
}

}  // namespace

Condition normalize(const Condition& c) {
  std::vector<std::pair<std::string, Clause>> clauses;
  for (const auto& clause : c.clauses) {
    std::vector<std::pair<std::string, Literal>> lits;
    for (const auto& l : clause) {
      Literal n{normalize_pred(l.pred), l.negated};
      lits.emplace_back(print(n), std::move(n));
    }
    std::sort(lits.begin(), lits.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    lits.erase(std::unique(lits.begin(), lits.end(),
                           [](const auto& a, const auto& b) { return a.first == b.first; }),
               lits.end());
    Clause out;
    for (auto& [_, l] : lits) out.push_back(std::move(l));
    clauses.emplace_back(print_clause(out, false), std::move(out));
  }
  std::sort(clauses.begin(), clauses.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  clauses.erase(std::unique(clauses.begin(), clauses.end(),
                            [](const auto& a, const auto& b) { return a.first == b.first; }),
                clauses.end());
  Condition out;
  for (auto& [_, cl] : clauses) out.clauses.push_back(std::move(cl));
  return out;
}

Sketch sketch(const Condition& c) { return Sketch{print_condition(normalize(c), true)}; }

std::set<std::string> predicate_sketches(const Condition& c) {
  std::set<std::string> out;
  for (const auto& clause : normalize(c).clauses)
    for (const auto& l : clause) out.insert(print_literal(l, true));
  return out;
}

std::set<std::string> constants_of(const Condition& c) {
  std::set<std::string> out;
  for (const auto& clause : c.clauses) {
    for (const auto& l : clause) {
      const auto& p = l.pred;
      std::vector<double> nums;
      switch (p.kind) {
        case PredKind::Compare:
          p.lhs.collect_constants(nums);
          p.rhs.collect_constants(nums);
          break;
        case PredKind::Between:
          p.lhs.collect_constants(nums);
          nums.push_back(p.lo);
          nums.push_back(p.hi);
          break;
        case PredKind::DateBefore:
        case PredKind::DateAfter: out.insert(format_date(p.date)); break;
        case PredKind::YearEquals: out.insert(std::to_string(p.year)); break;
        default:
          if (is_text(p.kind)) out.insert(fold_case(trim(p.text)));
      }
      for (double v : nums) out.insert(format_number(v));
    }
  }
  return out;
}

std::set<std::string> columns_of(const Condition& c) {
  std::set<std::string> out;
  for (const auto& clause : c.clauses) {
    for (const auto& l : clause) {
      std::vector<std::string> cols;
      l.pred.lhs.collect_columns(cols);
      if (l.pred.kind == PredKind::Compare) l.pred.rhs.collect_columns(cols);
      if (l.pred.kind != PredKind::Compare && l.pred.kind != PredKind::Between && !l.pred.column.empty())
        cols.push_back(l.pred.column);
      out.insert(cols.begin(), cols.end());
    }
  }
  return out;
}

// --- complexity --------------------------------------------------------------

namespace {

std::size_t leaf_count(const NumExpr& e) {
  if (e.kind() == NumExpr::Kind::Column || e.kind() == NumExpr::Kind::Constant) return 1;
  return leaf_count(e.lhs()) + leaf_count(e.rhs());
}

std::pair<std::size_t, std::size_t> pred_complexity(const Predicate& p) {
  switch (p.kind) {
    case PredKind::Compare:
      return {1 + leaf_count(p.lhs) + leaf_count(p.rhs), 1 + std::max(p.lhs.depth(), p.rhs.depth())};
    case PredKind::Between: return {1 + leaf_count(p.lhs) + 2, 1 + p.lhs.depth()};
    default: {
      std::size_t args = p.column.empty() ? 0 : 1;
      if (is_text(p.kind) || p.kind == PredKind::DateBefore || p.kind == PredKind::DateAfter ||
          p.kind == PredKind::YearEquals)
        ++args;
      return {1 + args, args ? 2 : 1};
    }
  }
}

}  // namespace

Complexity complexity(const Condition& c) {
  const Condition n = normalize(c);
  Complexity out;
  std::size_t cond_depth = 0;
  for (const auto& clause : n.clauses) {
    std::size_t clause_depth = 0;
    for (const auto& l : clause) {
      auto [tokens, depth] = pred_complexity(l.pred);
      out.token_count += tokens;
      clause_depth = std::max(clause_depth, depth + (l.negated ? 1 : 0));
    }
    if (clause.size() > 1) ++clause_depth;
    cond_depth = std::max(cond_depth, clause_depth);
  }
  if (n.clauses.size() > 1) ++cond_depth;
  out.ast_depth = cond_depth;
  return out;
}

std::vector<std::string> tokenize_printed(const Condition& c) {
  std::vector<std::string> out;
  for (const auto& t : lex(print(c))) {
    switch (t.type) {
      case Tok::End: break;
      case Tok::ColRef: out.push_back("[@" + t.text + "]"); break;
      case Tok::String: out.push_back(quote(t.text)); break;
      default: out.push_back(t.text);
    }
  }
  return out;
}

// --- JSON --------------------------------------------------------------------

namespace {

json expr_to_json(const NumExpr& e) {
  switch (e.kind()) {
    case NumExpr::Kind::Column: return json{{"col", e.header()}};
    case NumExpr::Kind::Constant: return json{{"num", e.value()}};
    default:
      return json{{"op", e.kind() == NumExpr::Kind::Add ? "+" : "-"},
                  {"lhs", expr_to_json(e.lhs())},
                  {"rhs", expr_to_json(e.rhs())}};
  }
}

NumExpr expr_from_json(const json& j) {
  if (j.contains("col")) return NumExpr::column(j["col"].get<std::string>());
  if (j.contains("num")) return NumExpr::constant(j["num"].get<double>());
  const auto op = j.at("op").get<std::string>();
  NumExpr l = expr_from_json(j.at("lhs")), r = expr_from_json(j.at("rhs"));
  if (op == "+") return NumExpr::add(std::move(l), std::move(r));
  if (op == "-") return NumExpr::sub(std::move(l), std::move(r));
  throw Error("condition JSON: unknown arithmetic operator " + op);
}

json pred_to_json(const Predicate& p) {
  json j{{"kind", std::string(to_string(p.kind))}};
  switch (p.kind) {
    case PredKind::Compare:
      j["lhs"] = expr_to_json(p.lhs);
      j["op"] = std::string(to_string(p.op));
      j["rhs"] = expr_to_json(p.rhs);
      return j;
    case PredKind::Between:
      j["expr"] = expr_to_json(p.lhs);
      j["lo"] = p.lo;
      j["hi"] = p.hi;
      return j;
    default: break;
  }
  if (!p.column.empty()) j["column"] = p.column;
  if (is_text(p.kind)) j["text"] = p.text;
  if (p.kind == PredKind::DateBefore || p.kind == PredKind::DateAfter) j["date"] = format_date(p.date);
  if (p.kind == PredKind::YearEquals) j["year"] = p.year;
  return j;
}

CmpOp op_from_string(const std::string& s) {
  for (CmpOp op : {CmpOp::Gt, CmpOp::Ge, CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ne})
    if (to_string(op) == s) return op;
  throw Error("condition JSON: unknown comparison operator " + s);
}

Predicate pred_from_json(const json& j) {
  const auto name = j.at("kind").get<std::string>();
  if (name == "Compare")
    return Predicate::compare(expr_from_json(j.at("lhs")), op_from_string(j.at("op").get<std::string>()),
                              expr_from_json(j.at("rhs")));
  auto kind = kind_from_name(name);
  if (!kind) throw Error("condition JSON: unknown predicate kind " + name);
  if (*kind == PredKind::Between)
    return Predicate::between(expr_from_json(j.at("expr")), j.at("lo").get<double>(),
                              j.at("hi").get<double>());
  const std::string column = j.value("column", "");
  if (is_text(*kind)) return Predicate::text_pred(*kind, column, j.at("text").get<std::string>());
  if (*kind == PredKind::DateBefore || *kind == PredKind::DateAfter) {
    auto d = parse_date(j.at("date").get<std::string>());
    if (!d) throw Error("condition JSON: invalid date");
    return Predicate::date_pred(*kind, column, *d);
  }
  if (*kind == PredKind::YearEquals) return Predicate::year_equals(column, j.at("year").get<int>());
  if (is_date_window(*kind)) return Predicate::date_pred(*kind, column);
  return Predicate::general(*kind, column);
}

}  // namespace

json to_json(const Condition& c) {
  json clauses = json::array();
  for (const auto& clause : c.clauses) {
    json lits = json::array();
    for (const auto& l : clause) lits.push_back(json{{"neg", l.negated}, {"pred", pred_to_json(l.pred)}});
    clauses.push_back(std::move(lits));
  }
  return json{{"clauses", clauses}};
}

Condition condition_from_json(const json& j) {
  Condition c;
  for (const auto& jc : j.at("clauses")) {
    Clause clause;
    for (const auto& jl : jc) clause.push_back(Literal{pred_from_json(jl.at("pred")), jl.value("neg", false)});
    if (clause.empty()) throw Error("condition JSON: empty clause");
    c.clauses.push_back(std::move(clause));
  }
  if (c.clauses.empty()) throw Error("condition JSON: no clauses");
  return c;
}

}  // namespace autocf
