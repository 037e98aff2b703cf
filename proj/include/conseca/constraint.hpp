#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "conseca/pattern.hpp"
#include "conseca/result.hpp"

namespace conseca {

class ConstraintExpr;
using ExprPtr = std::shared_ptr<const ConstraintExpr>;

/// Boolean constraint over the positional arguments of a tool call.
///
/// Grammar (keywords lowercase, `and` binds tighter than `or`):
///   expr  := or
///   or    := and { "or" and }
///   and   := unary { "and" unary }
///   unary := "not" unary | atom
///   atom  := "true" | "false"
///          | "match" "(" argref "," string ")"
///          | "fullmatch" "(" argref "," string ")"
///          | "exists" "(" argref ")"
///          | "(" expr ")"
///   argref := "$" positive-integer          (1-indexed argument position)
///   string := double-quoted, escapes \" and \\ only
///
/// `match` is an unanchored search over the referenced argument;
/// `fullmatch` must cover the whole argument. A reference past the end
/// of the argument list makes match/fullmatch/exists evaluate to false.
class ConstraintExpr {
public:
    enum class Kind { TrueLit, FalseLit, Not, And, Or, Match, FullMatch, Exists };

    static ExprPtr make_true();
    static ExprPtr make_false();
    static ExprPtr make_not(ExprPtr child);
    static ExprPtr make_and(ExprPtr lhs, ExprPtr rhs);
    static ExprPtr make_or(ExprPtr lhs, ExprPtr rhs);
    static ExprPtr make_match(int arg_index, Pattern pattern);
    static ExprPtr make_fullmatch(int arg_index, Pattern pattern);
    static ExprPtr make_exists(int arg_index);

    Kind kind() const { return kind_; }
    const ExprPtr& left() const { return lhs_; }
    const ExprPtr& right() const { return rhs_; }
    int arg_index() const { return arg_index_; }
    const Pattern& pattern() const { return pattern_; }

    /// Largest $N referenced anywhere in the tree (0 when none).
    int max_arg_index() const;

private:
    ConstraintExpr() = default;

    Kind kind_ = Kind::TrueLit;
    ExprPtr lhs_;
    ExprPtr rhs_;
    int arg_index_ = 0;
    Pattern pattern_;
};

struct ExprError {
    enum class Kind { Syntax, BadPattern };
    Kind kind = Kind::Syntax;
    std::string message;
    std::size_t position = 0;  // byte offset into the expression source
};

Result<ExprPtr, ExprError> parse_expr(std::string_view src);

/// Deterministic, side-effect-free evaluation.
bool eval_expr(const ConstraintExpr& expr, std::span<const std::string> args);

/// Canonical text form; parse_expr(to_text(e)) reproduces e exactly.
std::string to_text(const ConstraintExpr& expr);

bool expr_equal(const ConstraintExpr& a, const ConstraintExpr& b);

}  // namespace conseca
