#include "conseca/constraint.hpp"

#include <random>
#include <vector>

#include "doctest.h"
#include "regex_oracle.hpp"

using namespace conseca;

namespace {

ExprPtr parse_ok(std::string_view src) {
    auto r = parse_expr(src);
    REQUIRE_MESSAGE(r.ok(), "expr '", std::string(src), "' failed: ",
                    r.ok() ? "" : r.error().message);
    return r.take();
}

const char* kSendEmailExpr =
    "match($1,\"alice\") and match($2,\"^.*@work\\\\.com$\") and match($3,\"urgent\")";

// Random expression over small patterns; also returns nothing else —
// patterns come from the oracle generator so they always compile.
ExprPtr random_expr(std::mt19937_64& rng, int depth) {
    auto pick = [&](int n) { return int(rng() % std::uint64_t(n)); };
    if (depth <= 0 || pick(3) == 0) {
        switch (pick(4)) {
            case 0: return ConstraintExpr::make_true();
            case 1: return ConstraintExpr::make_false();
            case 2: {
                std::string pat = oracle::render(oracle::generate_pattern(rng, 4));
                auto compiled = compile_pattern(pat);
                REQUIRE(compiled.ok());
                int idx = 1 + pick(4);
                return pick(2) == 0 ? ConstraintExpr::make_match(idx, compiled.take())
                                    : ConstraintExpr::make_fullmatch(idx, compiled.take());
            }
            default: return ConstraintExpr::make_exists(1 + pick(5));
        }
    }
    switch (pick(3)) {
        case 0: return ConstraintExpr::make_not(random_expr(rng, depth - 1));
        case 1:
            return ConstraintExpr::make_and(random_expr(rng, depth - 1),
                                            random_expr(rng, depth - 1));
        default:
            return ConstraintExpr::make_or(random_expr(rng, depth - 1),
                                           random_expr(rng, depth - 1));
    }
}

std::vector<std::string> random_args(std::mt19937_64& rng) {
    std::vector<std::string> args;
    std::size_t n = rng() % 5;
    for (std::size_t i = 0; i < n; ++i) args.push_back(oracle::generate_input(rng, 8));
    return args;
}

}  // namespace

TEST_CASE("parses the three-conjunct argument constraint") {
    ExprPtr e = parse_ok(kSendEmailExpr);
    REQUIRE(e->kind() == ConstraintExpr::Kind::And);
    // left-associated: (m1 and m2) and m3
    REQUIRE(e->left()->kind() == ConstraintExpr::Kind::And);
    CHECK(e->right()->kind() == ConstraintExpr::Kind::Match);
    CHECK(e->right()->arg_index() == 3);
    CHECK(e->left()->left()->pattern().source() == "alice");
    CHECK(e->left()->right()->pattern().source() == "^.*@work\\.com$");
    CHECK(to_text(*e) == kSendEmailExpr);
}

TEST_CASE("literal and error cases") {
    CHECK(parse_ok("true")->kind() == ConstraintExpr::Kind::TrueLit);
    CHECK(parse_ok("false")->kind() == ConstraintExpr::Kind::FalseLit);
    CHECK(parse_ok("exists($2)")->arg_index() == 2);

    auto bad = parse_expr("match($1,\"a(b\")");
    REQUIRE_FALSE(bad.ok());
    CHECK(bad.error().kind == ExprError::Kind::BadPattern);

    auto syn = parse_expr("match($1,");
    REQUIRE_FALSE(syn.ok());
    CHECK(syn.error().kind == ExprError::Kind::Syntax);

    CHECK_FALSE(parse_expr("").ok());
    CHECK_FALSE(parse_expr("match($0,\"a\")").ok());  // indices are 1-based
    CHECK_FALSE(parse_expr("true extra").ok());
    CHECK_FALSE(parse_expr("Match($1,\"a\")").ok());  // keywords are lowercase
    CHECK_FALSE(parse_expr("match($1,\"a\\n\")").ok());  // only \" and \\ escapes
    CHECK(parse_ok("not true and false")->kind() == ConstraintExpr::Kind::And);
    CHECK(parse_ok("true or true and false")->kind() == ConstraintExpr::Kind::Or);
}

TEST_CASE("evaluation of the example policy constraint") {
    ExprPtr e = parse_ok(kSendEmailExpr);
    std::vector<std::string> good = {"alice", "bob@work.com", "urgent: server down", "on it"};
    std::vector<std::string> wrong_domain = {"alice", "bob@home.net", "urgent: x", "y"};
    CHECK(eval_expr(*e, good));
    CHECK_FALSE(eval_expr(*e, wrong_domain));

    // cross-check each conjunct against the enumeration oracle
    oracle::ONode alice;
    alice.kind = oracle::ONode::Kind::Seq;
    for (char c : std::string("alice")) {
        oracle::ONode lit;
        lit.lit = c;
        alice.children.push_back(lit);
    }
    CHECK(oracle::oracle_search(alice, good[0]));
    CHECK(oracle::oracle_search(alice, wrong_domain[0]));

    oracle::ONode domain;
    domain.kind = oracle::ONode::Kind::Seq;
    {
        oracle::ONode begin;
        begin.kind = oracle::ONode::Kind::Begin;
        domain.children.push_back(begin);
        oracle::ONode dotstar;
        dotstar.kind = oracle::ONode::Kind::Rep;
        dotstar.rep_min = 0;
        dotstar.rep_max = -1;
        oracle::ONode any;
        any.kind = oracle::ONode::Kind::Any;
        dotstar.children.push_back(any);
        domain.children.push_back(dotstar);
        for (char c : std::string("@work.com")) {
            oracle::ONode lit;
            lit.lit = c;
            domain.children.push_back(lit);
        }
        oracle::ONode end;
        end.kind = oracle::ONode::Kind::End;
        domain.children.push_back(end);
    }
    CHECK(oracle::oracle_search(domain, good[1]));
    CHECK_FALSE(oracle::oracle_search(domain, wrong_domain[1]));
}

TEST_CASE("missing argument rule") {
    ExprPtr e = parse_ok("match($5,\"x\")");
    std::vector<std::string> three = {"x", "x", "x"};
    CHECK_FALSE(eval_expr(*e, three));
    CHECK_FALSE(eval_expr(*parse_ok("fullmatch($5,\"x\")"), three));
    CHECK_FALSE(eval_expr(*parse_ok("exists($5)"), three));
    CHECK(eval_expr(*parse_ok("exists($3)"), three));
    CHECK(eval_expr(*parse_ok("not exists($5)"), three));
}

TEST_CASE("evaluation is deterministic over repeats") {
    std::mt19937_64 rng(7);
    ExprPtr e = random_expr(rng, 4);
    std::vector<std::string> args = random_args(rng);
    bool first = eval_expr(*e, args);
    for (int i = 0; i < 1000; ++i) CHECK(eval_expr(*e, args) == first);
}

TEST_CASE("De Morgan over random subtrees") {
    std::mt19937_64 rng(20240311);
    for (int i = 0; i < 300; ++i) {
        ExprPtr x = random_expr(rng, 3);
        ExprPtr y = random_expr(rng, 3);
        std::vector<std::string> args = random_args(rng);
        ExprPtr lhs = ConstraintExpr::make_not(ConstraintExpr::make_and(x, y));
        ExprPtr rhs = ConstraintExpr::make_or(ConstraintExpr::make_not(x),
                                              ConstraintExpr::make_not(y));
        CHECK(eval_expr(*lhs, args) == eval_expr(*rhs, args));
    }
}

TEST_CASE("to_text round-trips random expressions") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 500; ++i) {
        ExprPtr e = random_expr(rng, 4);
        std::string text = to_text(*e);
        auto reparsed = parse_expr(text);
        REQUIRE_MESSAGE(reparsed.ok(), "round-trip failed on: ", text);
        CAPTURE(text);
        CHECK(expr_equal(*e, *reparsed.value()));
        CHECK(to_text(*reparsed.value()) == text);
    }
}
