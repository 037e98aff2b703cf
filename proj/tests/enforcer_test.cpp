#include "conseca/enforcer.hpp"

#include <random>

#include "doctest.h"
#include "generators.hpp"

#include "conseca/simworld.hpp"

using namespace conseca;

namespace {

// The example policy: urgent work responses may be sent, deletion never.
Policy example_policy() {
    Policy p;
    p.task = "Get unread emails related to work and respond to any that are urgent";
    p.constraints["send_email"] = {
        true,
        parse_expr("match($1,\"alice\") and match($2,\"^.*@work\\\\.com$\") and "
                   "match($3,\"urgent\")")
            .take(),
        "We need to send urgent responses to emails. The sender must be 'alice' (current "
        "user). The recipient must be one of the users in the email list from work. The "
        "subject must contain 'urgent'."};
    p.constraints["delete_email"] = {false, nullptr,
                                     "We are not deleting any emails in this task."};
    return p;
}

ToolCommand cmd_of(const std::string& raw) {
    auto r = parse_command(raw);
    REQUIRE(r.ok());
    return r.take();
}

const ApiRegistry& registry() {
    static ApiRegistry reg = ApiRegistry::build(default_tool_docs()).take();
    return reg;
}

}  // namespace

TEST_CASE("denies with the stored rationale when can_execute is false") {
    Decision d = is_allowed(cmd_of("delete_email alice 3"), example_policy(), registry());
    CHECK_FALSE(d.allowed);
    CHECK(d.rationale == "We are not deleting any emails in this task.");
    CHECK(d.matched_api == "delete_email");
}

TEST_CASE("deny-by-default for unmapped APIs") {
    Decision d = is_allowed(cmd_of("format_disk /dev/sda"), example_policy(), registry());
    CHECK_FALSE(d.allowed);
    CHECK(d.rationale == std::string(kDenyByDefaultRationale));
    CHECK_FALSE(d.matched_api.has_value());
}

TEST_CASE("allows the urgent work response") {
    Decision d = is_allowed(
        cmd_of("send_email alice bob@work.com 'urgent: server down' 'on it'"),
        example_policy(), registry());
    CHECK(d.allowed);
    CHECK(d.rationale.find("The subject must contain 'urgent'.") != std::string::npos);
}

TEST_CASE("denies on failed argument constraints, with the same rationale") {
    Policy p = example_policy();
    Decision wrong_domain = is_allowed(
        cmd_of("send_email alice bob@home.net 'urgent: x' 'y'"), p, registry());
    CHECK_FALSE(wrong_domain.allowed);
    CHECK(wrong_domain.rationale == p.constraints.at("send_email").rationale);

    CHECK_FALSE(is_allowed(cmd_of("send_email mallory bob@work.com 'urgent: x' 'y'"), p,
                           registry())
                    .allowed);
    CHECK_FALSE(is_allowed(cmd_of("send_email alice bob@work.com 'hello' 'y'"), p, registry())
                    .allowed);
}

TEST_CASE("arity underflow is a deny, not an error") {
    Decision d = is_allowed(cmd_of("send_email alice"), example_policy(), registry());
    CHECK_FALSE(d.allowed);
    CHECK(d.rationale == "send_email requires at least 4 arguments, got 1");

    // extra arguments beyond the declared list are fine (optional attachment)
    Policy p = example_policy();
    Decision extra = is_allowed(
        cmd_of("send_email alice bob@work.com 'urgent: x' 'body' /tmp/a 'even more'"), p,
        registry());
    CHECK(extra.allowed);
}

TEST_CASE("deny-by-default property over random policies and commands") {
    std::mt19937_64 rng(77);
    const ApiRegistry& reg = registry();
    for (int i = 0; i < 2000; ++i) {
        Policy p = testgen::random_policy(rng);
        ToolCommand cmd;
        do {
            cmd.api_name = testgen::random_api_name(rng);
        } while (p.constraints.count(cmd.api_name) != 0);
        std::size_t nargs = rng() % 4;
        for (std::size_t a = 0; a < nargs; ++a)
            cmd.args.push_back(testgen::random_text(rng, 10, true));
        Decision d = is_allowed(cmd, p, reg);
        CHECK_FALSE(d.allowed);
        CHECK(d.rationale == std::string(kDenyByDefaultRationale));
    }
}

TEST_CASE("decisions are byte-identical across repeats and map orderings") {
    Policy forward = example_policy();
    Policy reversed;
    reversed.task = forward.task;
    // insert in reverse order; std::map canonicalizes
    reversed.constraints["send_email"] = forward.constraints.at("send_email");
    reversed.constraints["delete_email"] = forward.constraints.at("delete_email");

    ToolCommand cmd = cmd_of("send_email alice bob@work.com 'urgent: server down' 'on it'");
    Decision first = is_allowed(cmd, forward, registry());
    for (int i = 0; i < 100; ++i) {
        Decision again = is_allowed(cmd, reversed, registry());
        CHECK(again.allowed == first.allowed);
        CHECK(again.rationale == first.rationale);
        CHECK(again.matched_api == first.matched_api);
    }
}

TEST_CASE("removing a constraint entry never turns a deny into an allow") {
    std::mt19937_64 rng(31337);
    const ApiRegistry& reg = registry();
    int denied_seen = 0;
    for (int i = 0; i < 3000 && denied_seen < 500; ++i) {
        Policy p = testgen::random_policy(rng);
        if (p.constraints.empty()) continue;
        ToolCommand cmd;
        // aim at a key that exists so step (2)/(4) denials occur too
        std::size_t pick = rng() % p.constraints.size();
        auto it = p.constraints.begin();
        std::advance(it, long(pick));
        cmd.api_name = it->first;
        std::size_t nargs = rng() % 4;
        for (std::size_t a = 0; a < nargs; ++a)
            cmd.args.push_back(testgen::random_text(rng, 10, true));
        if (is_allowed(cmd, p, reg).allowed) continue;
        ++denied_seen;
        for (auto victim = p.constraints.begin(); victim != p.constraints.end();) {
            Policy reduced = p;
            reduced.constraints.erase(victim->first);
            CHECK_FALSE(is_allowed(cmd, reduced, reg).allowed);
            ++victim;
        }
    }
    CHECK(denied_seen > 0);
}
