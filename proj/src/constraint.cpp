#include "conseca/constraint.hpp"

#include <algorithm>
#include <cctype>

namespace conseca {

namespace {

ExprPtr finish(ConstraintExpr e) { return std::make_shared<const ConstraintExpr>(std::move(e)); }

}  // namespace

ExprPtr ConstraintExpr::make_true() {
    ConstraintExpr e;
    e.kind_ = Kind::TrueLit;
    return finish(std::move(e));
}
ExprPtr ConstraintExpr::make_false() {
    ConstraintExpr e;
    e.kind_ = Kind::FalseLit;
    return finish(std::move(e));
}
ExprPtr ConstraintExpr::make_not(ExprPtr child) {
    ConstraintExpr e;
    e.kind_ = Kind::Not;
    e.lhs_ = std::move(child);
    return finish(std::move(e));
}
ExprPtr ConstraintExpr::make_and(ExprPtr lhs, ExprPtr rhs) {
    ConstraintExpr e;
    e.kind_ = Kind::And;
    e.lhs_ = std::move(lhs);
    e.rhs_ = std::move(rhs);
    return finish(std::move(e));
}
ExprPtr ConstraintExpr::make_or(ExprPtr lhs, ExprPtr rhs) {
    ConstraintExpr e;
    e.kind_ = Kind::Or;
    e.lhs_ = std::move(lhs);
    e.rhs_ = std::move(rhs);
    return finish(std::move(e));
}
ExprPtr ConstraintExpr::make_match(int arg_index, Pattern pattern) {
    ConstraintExpr e;
    e.kind_ = Kind::Match;
    e.arg_index_ = arg_index;
    e.pattern_ = std::move(pattern);
    return finish(std::move(e));
}
ExprPtr ConstraintExpr::make_fullmatch(int arg_index, Pattern pattern) {
    ConstraintExpr e;
    e.kind_ = Kind::FullMatch;
    e.arg_index_ = arg_index;
    e.pattern_ = std::move(pattern);
    return finish(std::move(e));
}
ExprPtr ConstraintExpr::make_exists(int arg_index) {
    ConstraintExpr e;
    e.kind_ = Kind::Exists;
    e.arg_index_ = arg_index;
    return finish(std::move(e));
}

int ConstraintExpr::max_arg_index() const {
    int m = arg_index_;
    if (lhs_) m = std::max(m, lhs_->max_arg_index());
    if (rhs_) m = std::max(m, rhs_->max_arg_index());
    return m;
}

namespace {

constexpr int kMaxExprDepth = 256;

struct ExprParser {
    std::string_view src;
    std::size_t pos = 0;
    int depth = 0;
    bool failed = false;
    ExprError err;

    ExprPtr fail(ExprError::Kind kind, std::string message, std::size_t at) {
        if (!failed) {
            failed = true;
            err = {kind, std::move(message), at};
        }
        return nullptr;
    }

    void skip_ws() {
        while (pos < src.size() &&
               (src[pos] == ' ' || src[pos] == '\t' || src[pos] == '\n' || src[pos] == '\r'))
            ++pos;
    }

    bool at_end() {
        skip_ws();
        return pos >= src.size();
    }

    // Reads a keyword made of lowercase letters without consuming.
    std::string_view peek_word() {
        skip_ws();
        std::size_t start = pos;
        std::size_t end = start;
        while (end < src.size() && src[end] >= 'a' && src[end] <= 'z') ++end;
        return src.substr(start, end - start);
    }

    bool eat_word(std::string_view w) {
        if (peek_word() != w) return false;
        skip_ws();
        pos += w.size();
        return true;
    }

    bool eat_char(char c) {
        skip_ws();
        if (pos < src.size() && src[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    ExprPtr parse_or() {
        if (++depth > kMaxExprDepth) return fail(ExprError::Kind::Syntax, "expression nested too deeply", pos);
        ExprPtr lhs = parse_and();
        while (!failed && eat_word("or")) {
            ExprPtr rhs = parse_and();
            if (failed) break;
            lhs = ConstraintExpr::make_or(std::move(lhs), std::move(rhs));
        }
        --depth;
        return failed ? nullptr : lhs;
    }

    ExprPtr parse_and() {
        ExprPtr lhs = parse_unary();
        while (!failed && eat_word("and")) {
            ExprPtr rhs = parse_unary();
            if (failed) break;
            lhs = ConstraintExpr::make_and(std::move(lhs), std::move(rhs));
        }
        return failed ? nullptr : lhs;
    }

    ExprPtr parse_unary() {
        if (++depth > kMaxExprDepth) return fail(ExprError::Kind::Syntax, "expression nested too deeply", pos);
        ExprPtr result;
        if (eat_word("not")) {
            ExprPtr child = parse_unary();
            result = failed ? nullptr : ConstraintExpr::make_not(std::move(child));
        } else {
            result = parse_atom();
        }
        --depth;
        return result;
    }

    ExprPtr parse_atom() {
        skip_ws();
        std::size_t at = pos;
        if (eat_char('(')) {
            ExprPtr inner = parse_or();
            if (failed) return nullptr;
            if (!eat_char(')'))
                return fail(ExprError::Kind::Syntax, "expected ')'", pos);
            return inner;
        }
        std::string_view w = peek_word();
        if (w == "true") {
            eat_word(w);
            return ConstraintExpr::make_true();
        }
        if (w == "false") {
            eat_word(w);
            return ConstraintExpr::make_false();
        }
        if (w == "match" || w == "fullmatch") {
            bool full = w == "fullmatch";
            eat_word(w);
            if (!eat_char('(')) return fail(ExprError::Kind::Syntax, "expected '('", pos);
            int idx = 0;
            if (!parse_argref(idx)) return nullptr;
            if (!eat_char(',')) return fail(ExprError::Kind::Syntax, "expected ','", pos);
            std::string pat_src;
            if (!parse_string(pat_src)) return nullptr;
            std::size_t pat_at = pos;
            if (!eat_char(')')) return fail(ExprError::Kind::Syntax, "expected ')'", pos);
            auto compiled = compile_pattern(pat_src);
            if (!compiled)
                return fail(ExprError::Kind::BadPattern,
                            "bad pattern: " + compiled.error().reason, pat_at);
            return full ? ConstraintExpr::make_fullmatch(idx, compiled.take())
                        : ConstraintExpr::make_match(idx, compiled.take());
        }
        if (w == "exists") {
            eat_word(w);
            if (!eat_char('(')) return fail(ExprError::Kind::Syntax, "expected '('", pos);
            int idx = 0;
            if (!parse_argref(idx)) return nullptr;
            if (!eat_char(')')) return fail(ExprError::Kind::Syntax, "expected ')'", pos);
            return ConstraintExpr::make_exists(idx);
        }
        return fail(ExprError::Kind::Syntax,
                    "expected 'true', 'false', 'not', 'match', 'fullmatch', 'exists' or '('", at);
    }

    bool parse_argref(int& out) {
        skip_ws();
        std::size_t at = pos;
        if (pos >= src.size() || src[pos] != '$') {
            fail(ExprError::Kind::Syntax, "expected argument reference '$N'", at);
            return false;
        }
        ++pos;
        if (pos >= src.size() || !std::isdigit(static_cast<unsigned char>(src[pos]))) {
            fail(ExprError::Kind::Syntax, "expected digits after '$'", pos);
            return false;
        }
        long v = 0;
        while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) {
            v = v * 10 + (src[pos] - '0');
            if (v > 1000000) {
                fail(ExprError::Kind::Syntax, "argument index too large", at);
                return false;
            }
            ++pos;
        }
        if (v < 1) {
            fail(ExprError::Kind::Syntax, "argument indices are 1-based", at);
            return false;
        }
        out = int(v);
        return true;
    }

    bool parse_string(std::string& out) {
        skip_ws();
        std::size_t at = pos;
        if (pos >= src.size() || src[pos] != '"') {
            fail(ExprError::Kind::Syntax, "expected '\"'", at);
            return false;
        }
        ++pos;
        out.clear();
        while (pos < src.size()) {
            char c = src[pos];
            if (c == '"') {
                ++pos;
                return true;
            }
            if (c == '\\') {
                if (pos + 1 >= src.size()) {
                    fail(ExprError::Kind::Syntax, "unterminated string", at);
                    return false;
                }
                char e = src[pos + 1];
                if (e != '"' && e != '\\') {
                    fail(ExprError::Kind::Syntax,
                         "invalid string escape (only \\\" and \\\\ are recognized)", pos);
                    return false;
                }
                out.push_back(e);
                pos += 2;
                continue;
            }
            out.push_back(c);
            ++pos;
        }
        fail(ExprError::Kind::Syntax, "unterminated string", at);
        return false;
    }
};

std::string escape_string(std::string_view s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

int precedence(ConstraintExpr::Kind k) {
    switch (k) {
        case ConstraintExpr::Kind::Or: return 1;
        case ConstraintExpr::Kind::And: return 2;
        case ConstraintExpr::Kind::Not: return 3;
        default: return 4;
    }
}

void render(const ConstraintExpr& e, int min_prec, std::string& out) {
    const int prec = precedence(e.kind());
    const bool parens = prec < min_prec;
    if (parens) out.push_back('(');
    switch (e.kind()) {
        case ConstraintExpr::Kind::TrueLit: out += "true"; break;
        case ConstraintExpr::Kind::FalseLit: out += "false"; break;
        case ConstraintExpr::Kind::Not:
            out += "not ";
            render(*e.left(), 3, out);
            break;
        case ConstraintExpr::Kind::And:
            render(*e.left(), 2, out);
            out += " and ";
            render(*e.right(), 3, out);
            break;
        case ConstraintExpr::Kind::Or:
            render(*e.left(), 1, out);
            out += " or ";
            render(*e.right(), 2, out);
            break;
        case ConstraintExpr::Kind::Match:
        case ConstraintExpr::Kind::FullMatch:
            out += e.kind() == ConstraintExpr::Kind::Match ? "match($" : "fullmatch($";
            out += std::to_string(e.arg_index());
            out += ",\"";
            out += escape_string(e.pattern().source());
            out += "\")";
            break;
        case ConstraintExpr::Kind::Exists:
            out += "exists($";
            out += std::to_string(e.arg_index());
            out += ")";
            break;
    }
    if (parens) out.push_back(')');
}

}  // namespace

Result<ExprPtr, ExprError> parse_expr(std::string_view src) {
    ExprParser parser{src};
    ExprPtr root = parser.parse_or();
    if (parser.failed) return parser.err;
    if (!parser.at_end())
        return ExprError{ExprError::Kind::Syntax, "unexpected trailing input", parser.pos};
    return root;
}

bool eval_expr(const ConstraintExpr& expr, std::span<const std::string> args) {
    switch (expr.kind()) {
        case ConstraintExpr::Kind::TrueLit: return true;
        case ConstraintExpr::Kind::FalseLit: return false;
        case ConstraintExpr::Kind::Not: return !eval_expr(*expr.left(), args);
        case ConstraintExpr::Kind::And:
            return eval_expr(*expr.left(), args) && eval_expr(*expr.right(), args);
        case ConstraintExpr::Kind::Or:
            return eval_expr(*expr.left(), args) || eval_expr(*expr.right(), args);
        case ConstraintExpr::Kind::Match: {
            std::size_t i = std::size_t(expr.arg_index());
            if (i < 1 || i > args.size()) return false;
            return expr.pattern().search(args[i - 1]);
        }
        case ConstraintExpr::Kind::FullMatch: {
            std::size_t i = std::size_t(expr.arg_index());
            if (i < 1 || i > args.size()) return false;
            return expr.pattern().fullmatch(args[i - 1]);
        }
        case ConstraintExpr::Kind::Exists: {
            std::size_t i = std::size_t(expr.arg_index());
            return i >= 1 && i <= args.size();
        }
    }
    return false;
}

std::string to_text(const ConstraintExpr& expr) {
    std::string out;
    render(expr, 0, out);
    return out;
}

bool expr_equal(const ConstraintExpr& a, const ConstraintExpr& b) {
    if (a.kind() != b.kind()) return false;
    switch (a.kind()) {
        case ConstraintExpr::Kind::TrueLit:
        case ConstraintExpr::Kind::FalseLit:
            return true;
        case ConstraintExpr::Kind::Not:
            return expr_equal(*a.left(), *b.left());
        case ConstraintExpr::Kind::And:
        case ConstraintExpr::Kind::Or:
            return expr_equal(*a.left(), *b.left()) && expr_equal(*a.right(), *b.right());
        case ConstraintExpr::Kind::Match:
        case ConstraintExpr::Kind::FullMatch:
            return a.arg_index() == b.arg_index() &&
                   a.pattern().source() == b.pattern().source();
        case ConstraintExpr::Kind::Exists:
            return a.arg_index() == b.arg_index();
    }
    return false;
}

}  // namespace conseca
