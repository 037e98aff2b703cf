#include "regex_oracle.hpp"

namespace oracle {

namespace {

bool class_matches(const ONode& node, char c) {
    bool is_in = node.class_chars.find(c) != std::string::npos;
    return is_in != node.negated;
}

std::set<std::size_t> apply_once_to_set(const ONode& child, std::string_view input,
                                        const std::set<std::size_t>& from) {
    std::set<std::size_t> out;
    for (std::size_t p : from) {
        auto e = ends(child, input, p);
        out.insert(e.begin(), e.end());
    }
    return out;
}

}  // namespace

std::set<std::size_t> ends(const ONode& node, std::string_view input, std::size_t pos) {
    std::set<std::size_t> out;
    switch (node.kind) {
        case ONode::Kind::Lit:
            if (pos < input.size() && input[pos] == node.lit) out.insert(pos + 1);
            break;
        case ONode::Kind::Any:
            if (pos < input.size() && input[pos] != '\n') out.insert(pos + 1);
            break;
        case ONode::Kind::Class:
            if (pos < input.size() && class_matches(node, input[pos])) out.insert(pos + 1);
            break;
        case ONode::Kind::Begin:
            if (pos == 0) out.insert(pos);
            break;
        case ONode::Kind::End:
            if (pos == input.size()) out.insert(pos);
            break;
        case ONode::Kind::Seq: {
            std::set<std::size_t> cur = {pos};
            for (const auto& child : node.children) {
                cur = apply_once_to_set(child, input, cur);
                if (cur.empty()) break;
            }
            out = cur;
            break;
        }
        case ONode::Kind::Alt:
            for (const auto& child : node.children) {
                auto e = ends(child, input, pos);
                out.insert(e.begin(), e.end());
            }
            break;
        case ONode::Kind::Rep: {
            const ONode& child = node.children.at(0);
            std::set<std::size_t> cur = {pos};
            for (int k = 0; k < node.rep_min; ++k) {
                cur = apply_once_to_set(child, input, cur);
                if (cur.empty()) return out;
            }
            // Accumulate optional applications up to max (or fixpoint
            // when unbounded). Position sets are finite, so the
            // fixpoint always terminates.
            std::set<std::size_t> acc = cur;
            std::set<std::size_t> frontier = cur;
            int remaining = node.rep_max < 0 ? -1 : node.rep_max - node.rep_min;
            while (remaining != 0 && !frontier.empty()) {
                std::set<std::size_t> next = apply_once_to_set(child, input, frontier);
                std::set<std::size_t> fresh;
                for (std::size_t p : next)
                    if (acc.insert(p).second) fresh.insert(p);
                frontier = std::move(fresh);
                if (remaining > 0) --remaining;
            }
            out = acc;
            break;
        }
    }
    return out;
}

bool oracle_search(const ONode& node, std::string_view input) {
    for (std::size_t start = 0; start <= input.size(); ++start)
        if (!ends(node, input, start).empty()) return true;
    return false;
}

bool oracle_fullmatch(const ONode& node, std::string_view input) {
    return ends(node, input, 0).count(input.size()) != 0;
}

namespace {

std::string render_child_grouped(const ONode& child) {
    bool atom = child.kind == ONode::Kind::Lit || child.kind == ONode::Kind::Any ||
                child.kind == ONode::Kind::Class;
    std::string r = render(child);
    return atom ? r : "(" + r + ")";
}

std::string render_literal(char c) {
    static const std::string meta = "\\.[](){}*+?|^$";
    std::string out;
    if (meta.find(c) != std::string::npos) out.push_back('\\');
    out.push_back(c);
    return out;
}

}  // namespace

std::string render(const ONode& node) {
    switch (node.kind) {
        case ONode::Kind::Lit:
            return render_literal(node.lit);
        case ONode::Kind::Any:
            return ".";
        case ONode::Kind::Class: {
            std::string out = "[";
            if (node.negated) out += "^";
            for (char c : node.class_chars) {
                // '.' and '@' are literal inside classes in the dialect
                if (c == ']' || c == '\\' || c == '^' || c == '-') out.push_back('\\');
                out.push_back(c);
            }
            out += "]";
            return out;
        }
        case ONode::Kind::Begin:
            return "^";
        case ONode::Kind::End:
            return "$";
        case ONode::Kind::Seq: {
            std::string out;
            for (const auto& child : node.children) {
                if (child.kind == ONode::Kind::Alt)
                    out += "(" + render(child) + ")";
                else
                    out += render(child);
            }
            return out;
        }
        case ONode::Kind::Alt: {
            std::string out;
            for (std::size_t i = 0; i < node.children.size(); ++i) {
                if (i) out += "|";
                const auto& child = node.children[i];
                if (child.kind == ONode::Kind::Alt)
                    out += "(" + render(child) + ")";
                else
                    out += render(child);
            }
            return out;
        }
        case ONode::Kind::Rep: {
            const ONode& child = node.children.at(0);
            std::string base = render_child_grouped(child);
            if (node.rep_min == 0 && node.rep_max == -1) return base + "*";
            if (node.rep_min == 1 && node.rep_max == -1) return base + "+";
            if (node.rep_min == 0 && node.rep_max == 1) return base + "?";
            if (node.rep_max == -1) return base + "{" + std::to_string(node.rep_min) + ",}";
            if (node.rep_min == node.rep_max)
                return base + "{" + std::to_string(node.rep_min) + "}";
            return base + "{" + std::to_string(node.rep_min) + "," +
                   std::to_string(node.rep_max) + "}";
        }
    }
    return "";
}

namespace {

constexpr std::string_view kAlphabet = "ab@.";

ONode gen(std::mt19937_64& rng, int& budget, int depth) {
    auto pick = [&](int n) { return int(rng() % std::uint64_t(n)); };
    --budget;
    int max_kind = depth >= 4 || budget <= 0 ? 3 : 8;
    switch (pick(max_kind)) {
        case 0:
        case 1: {
            ONode n;
            n.kind = ONode::Kind::Lit;
            n.lit = kAlphabet[std::size_t(pick(int(kAlphabet.size())))];
            return n;
        }
        case 2: {
            ONode n;
            n.kind = ONode::Kind::Any;
            return n;
        }
        case 3: {
            ONode n;
            n.kind = ONode::Kind::Class;
            n.negated = pick(3) == 0;
            int members = 1 + pick(3);
            for (int i = 0; i < members; ++i) {
                char c = kAlphabet[std::size_t(pick(int(kAlphabet.size())))];
                if (n.class_chars.find(c) == std::string::npos) n.class_chars.push_back(c);
            }
            return n;
        }
        case 4: {
            ONode n;
            n.kind = pick(2) == 0 ? ONode::Kind::Begin : ONode::Kind::End;
            return n;
        }
        case 5: {
            ONode n;
            n.kind = ONode::Kind::Seq;
            int parts = 2 + pick(2);
            for (int i = 0; i < parts && budget > 0; ++i)
                n.children.push_back(gen(rng, budget, depth + 1));
            if (n.children.empty()) n.children.push_back(gen(rng, budget, depth + 1));
            return n;
        }
        case 6: {
            ONode n;
            n.kind = ONode::Kind::Alt;
            int parts = 2 + pick(2);
            for (int i = 0; i < parts; ++i) n.children.push_back(gen(rng, budget, depth + 1));
            return n;
        }
        default: {
            ONode n;
            n.kind = ONode::Kind::Rep;
            n.children.push_back(gen(rng, budget, depth + 1));
            switch (pick(5)) {
                case 0: n.rep_min = 0; n.rep_max = -1; break;
                case 1: n.rep_min = 1; n.rep_max = -1; break;
                case 2: n.rep_min = 0; n.rep_max = 1; break;
                case 3: {
                    n.rep_min = pick(3);
                    n.rep_max = n.rep_min + pick(3);
                    break;
                }
                default: {
                    n.rep_min = 1 + pick(2);
                    n.rep_max = -1;
                    break;
                }
            }
            return n;
        }
    }
}

}  // namespace

ONode generate_pattern(std::mt19937_64& rng, int budget) {
    int b = budget;
    return gen(rng, b, 0);
}

std::string generate_input(std::mt19937_64& rng, std::size_t max_len) {
    std::size_t len = rng() % (max_len + 1);
    std::string out;
    out.reserve(len);
    for (std::size_t i = 0; i < len; ++i)
        out.push_back(kAlphabet[std::size_t(rng() % kAlphabet.size())]);
    return out;
}

}  // namespace oracle
