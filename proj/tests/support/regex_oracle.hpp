#pragma once

// Brute-force reference matcher for the pattern dialect, used as the
// independent oracle in tests. It works by set-enumeration of reachable
// end positions over its own little AST — no sharing with the engine's
// parser or NFA. Generated patterns come with both the AST (for the
// oracle) and rendered dialect text (for the engine), so the comparison
// also exercises the real pattern parser.

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace oracle {

struct ONode {
    enum class Kind { Lit, Any, Class, Seq, Alt, Rep, Begin, End };
    Kind kind = Kind::Lit;
    char lit = 'a';
    std::string class_chars;  // Class: member characters
    bool negated = false;     // Class
    std::vector<ONode> children;  // Seq, Alt
    int rep_min = 0, rep_max = 0;  // Rep; rep_max -1 = unbounded
};

// All positions where a match that starts at pos can end.
std::set<std::size_t> ends(const ONode& node, std::string_view input, std::size_t pos);

bool oracle_search(const ONode& node, std::string_view input);
bool oracle_fullmatch(const ONode& node, std::string_view input);

// Renders the node as dialect text the engine can compile.
std::string render(const ONode& node);

// Random pattern over the alphabet {a, b, @, .} with roughly `budget`
// atoms. Deterministic for a given rng state.
ONode generate_pattern(std::mt19937_64& rng, int budget);

// Random input string over {a, b, @, .} of length <= max_len.
std::string generate_input(std::mt19937_64& rng, std::size_t max_len);

}  // namespace oracle
