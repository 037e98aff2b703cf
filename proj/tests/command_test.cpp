#include "conseca/command.hpp"

#include <random>

#include "doctest.h"

using namespace conseca;

TEST_CASE("tokenizes the quoted email example") {
    auto r = parse_command("send_email alice bob 'Hello' 'An Email'");
    REQUIRE(r.ok());
    CHECK(r.value().api_name == "send_email");
    REQUIRE(r.value().args.size() == 4);
    CHECK(r.value().args[0] == "alice");
    CHECK(r.value().args[1] == "bob");
    CHECK(r.value().args[2] == "Hello");
    CHECK(r.value().args[3] == "An Email");
}

TEST_CASE("single argument path") {
    auto r = parse_command("mkdir /home/alice/Backups");
    REQUIRE(r.ok());
    CHECK(r.value().api_name == "mkdir");
    REQUIRE(r.value().args.size() == 1);
    CHECK(r.value().args[0] == "/home/alice/Backups");
}

TEST_CASE("unquoted metacharacters are forbidden") {
    auto r = parse_command("rm /tmp/x; send_email a b c d");
    REQUIRE_FALSE(r.ok());
    CHECK(r.error().kind == CommandError::Kind::ForbiddenConstruct);

    for (const char* cmd : {"a | b", "a & b", "a > f", "a < f", "a `id`", "a $(id)", "a (b)",
                            "a\nb", "echo )"}) {
        CAPTURE(cmd);
        auto bad = parse_command(cmd);
        REQUIRE_FALSE(bad.ok());
        CHECK(bad.error().kind == CommandError::Kind::ForbiddenConstruct);
    }
    // the same characters are fine inside quotes
    for (const char* cmd : {"echo 'a;b'", "echo 'a|b'", "echo \"a>b\"", "echo 'a(b)'",
                            "echo 'a\nb'", "echo 'a$(b)'"}) {
        CAPTURE(cmd);
        CHECK(parse_command(cmd).ok());
    }
}

TEST_CASE("quote handling") {
    auto r = parse_command("touch '/home/alice/My Notes.txt'");
    REQUIRE(r.ok());
    CHECK(r.value().args[0] == "/home/alice/My Notes.txt");

    auto concat = parse_command("echo a'b c'd");
    REQUIRE(concat.ok());
    REQUIRE(concat.value().args.size() == 1);
    CHECK(concat.value().args[0] == "ab cd");

    auto dquote = parse_command("echo \"she said \\\"hi\\\" to me\"");
    REQUIRE(dquote.ok());
    CHECK(dquote.value().args[0] == "she said \"hi\" to me");

    auto backslash = parse_command("echo \"a\\\\b\"");
    REQUIRE(backslash.ok());
    CHECK(backslash.value().args[0] == "a\\b");

    auto empty_arg = parse_command("echo ''");
    REQUIRE(empty_arg.ok());
    REQUIRE(empty_arg.value().args.size() == 1);
    CHECK(empty_arg.value().args[0] == "");

    auto unterminated = parse_command("echo 'abc");
    REQUIRE_FALSE(unterminated.ok());
    CHECK(unterminated.error().kind == CommandError::Kind::UnterminatedQuote);

    auto unterminated2 = parse_command("echo \"abc");
    REQUIRE_FALSE(unterminated2.ok());
    CHECK(unterminated2.error().kind == CommandError::Kind::UnterminatedQuote);
}

TEST_CASE("empty commands") {
    for (const char* cmd : {"", "   ", "\t"}) {
        auto r = parse_command(cmd);
        REQUIRE_FALSE(r.ok());
        CHECK(r.error().kind == CommandError::Kind::EmptyCommand);
    }
    CHECK_FALSE(parse_command("'' arg").ok());
}

TEST_CASE("canonical re-serialization round-trips") {
    std::vector<std::string> raws = {
        "send_email alice bob 'Hello' 'An Email'",
        "touch '/home/alice/My Notes.txt'",
        "echo 'a;b' plain \"d\\\"q\"",
        "echo '' x",
        "grep 'url=.*$' /home/alice/Logs/app_01.log",
    };
    for (const auto& raw : raws) {
        auto first = parse_command(raw);
        REQUIRE(first.ok());
        std::string canon = to_shell_text(first.value());
        auto second = parse_command(canon);
        REQUIRE_MESSAGE(second.ok(), "canonical text failed to reparse: ", canon);
        CHECK(second.value().api_name == first.value().api_name);
        CHECK(second.value().args == first.value().args);
        // canonical form is a fixed point
        CHECK(to_shell_text(second.value()) == canon);
    }
}

TEST_CASE("round-trip holds for adversarial argument contents") {
    std::mt19937_64 rng(424242);
    static const std::string pool = "ab '\"\\$;|&<>`(){}\n\t*?~#";
    for (int i = 0; i < 2000; ++i) {
        ToolCommand cmd;
        cmd.api_name = "api";
        std::size_t nargs = rng() % 4;
        for (std::size_t a = 0; a < nargs; ++a) {
            std::string arg;
            std::size_t len = rng() % 10;
            for (std::size_t k = 0; k < len; ++k) arg.push_back(pool[rng() % pool.size()]);
            cmd.args.push_back(std::move(arg));
        }
        std::string canon = to_shell_text(cmd);
        auto parsed = parse_command(canon);
        REQUIRE_MESSAGE(parsed.ok(), "failed on canonical: ", canon);
        CHECK(parsed.value().api_name == cmd.api_name);
        CHECK(parsed.value().args == cmd.args);
    }
}

TEST_CASE("fuzz: arbitrary bytes never crash and always produce a value or error") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 20000; ++i) {
        std::size_t len = rng() % 64;
        std::string input;
        input.reserve(len);
        for (std::size_t k = 0; k < len; ++k) input.push_back(char(rng() % 256));
        auto r = parse_command(input);
        if (r.ok()) {
            CHECK_FALSE(r.value().api_name.empty());
        } else {
            CHECK(r.error().message.size() > 0);
        }
    }
}
