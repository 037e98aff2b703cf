#include "conseca/pattern.hpp"

#include <algorithm>
#include <cstddef>

namespace conseca {
namespace rex {

std::vector<uint32_t> decode_utf8(std::string_view input, std::vector<std::size_t>* byte_offsets) {
    std::vector<uint32_t> out;
    out.reserve(input.size());
    if (byte_offsets) {
        byte_offsets->clear();
        byte_offsets->reserve(input.size() + 1);
    }
    const auto* bytes = reinterpret_cast<const unsigned char*>(input.data());
    std::size_t n = input.size();
    std::size_t i = 0;
    auto cont = [&](std::size_t k) { return k < n && (bytes[k] & 0xC0) == 0x80; };
    while (i < n) {
        if (byte_offsets) byte_offsets->push_back(i);
        unsigned char b = bytes[i];
        uint32_t cp = 0;
        std::size_t len = 1;
        bool valid = false;
        if (b < 0x80) {
            cp = b;
            valid = true;
        } else if ((b & 0xE0) == 0xC0 && cont(i + 1)) {
            cp = (uint32_t(b & 0x1F) << 6) | uint32_t(bytes[i + 1] & 0x3F);
            len = 2;
            valid = cp >= 0x80;
        } else if ((b & 0xF0) == 0xE0 && cont(i + 1) && cont(i + 2)) {
            cp = (uint32_t(b & 0x0F) << 12) | (uint32_t(bytes[i + 1] & 0x3F) << 6) |
                 uint32_t(bytes[i + 2] & 0x3F);
            len = 3;
            valid = cp >= 0x800 && !(cp >= 0xD800 && cp <= 0xDFFF);
        } else if ((b & 0xF8) == 0xF0 && cont(i + 1) && cont(i + 2) && cont(i + 3)) {
            cp = (uint32_t(b & 0x07) << 18) | (uint32_t(bytes[i + 1] & 0x3F) << 12) |
                 (uint32_t(bytes[i + 2] & 0x3F) << 6) | uint32_t(bytes[i + 3] & 0x3F);
            len = 4;
            valid = cp >= 0x10000 && cp <= 0x10FFFF;
        }
        if (!valid) {
            // Invalid byte: map into the surrogate gap so it can never
            // collide with a legitimately decoded scalar value.
            cp = 0xDC00 + b;
            len = 1;
        }
        out.push_back(cp);
        i += len;
    }
    if (byte_offsets) byte_offsets->push_back(n);
    return out;
}

namespace {

constexpr uint32_t kMaxCodePoint = 0x10FFFF;
constexpr int kMaxRepetition = 512;
constexpr std::size_t kMaxStates = 10000;
constexpr int kMaxGroupDepth = 200;

struct CharClass {
    std::vector<std::pair<uint32_t, uint32_t>> ranges;  // sorted, merged
    bool negated = false;

    bool match(uint32_t cp) const {
        auto it = std::upper_bound(ranges.begin(), ranges.end(), cp,
                                   [](uint32_t v, const auto& r) { return v < r.first; });
        bool in = it != ranges.begin() && cp <= std::prev(it)->second;
        return in != negated;
    }
};

void normalize(std::vector<std::pair<uint32_t, uint32_t>>& rs) {
    std::sort(rs.begin(), rs.end());
    std::vector<std::pair<uint32_t, uint32_t>> merged;
    for (const auto& r : rs) {
        if (!merged.empty() && r.first <= merged.back().second + 1 &&
            merged.back().second + 1 != 0) {
            merged.back().second = std::max(merged.back().second, r.second);
        } else {
            merged.push_back(r);
        }
    }
    rs = std::move(merged);
}

std::vector<std::pair<uint32_t, uint32_t>> complement(
    std::vector<std::pair<uint32_t, uint32_t>> rs) {
    normalize(rs);
    std::vector<std::pair<uint32_t, uint32_t>> out;
    uint32_t lo = 0;
    for (const auto& r : rs) {
        if (r.first > lo) out.emplace_back(lo, r.first - 1);
        lo = r.second == kMaxCodePoint ? kMaxCodePoint : r.second + 1;
        if (r.second == kMaxCodePoint) return out;
    }
    out.emplace_back(lo, kMaxCodePoint);
    return out;
}

std::vector<std::pair<uint32_t, uint32_t>> digit_ranges() { return {{'0', '9'}}; }
std::vector<std::pair<uint32_t, uint32_t>> word_ranges() {
    return {{'0', '9'}, {'A', 'Z'}, {'_', '_'}, {'a', 'z'}};
}
std::vector<std::pair<uint32_t, uint32_t>> space_ranges() {
    return {{0x09, 0x0D}, {0x20, 0x20}};
}

// ---- AST ------------------------------------------------------------

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    enum class Kind { Empty, Literal, Any, Class, Concat, Alt, Rep, Begin, End };
    Kind kind = Kind::Empty;
    uint32_t cp = 0;
    CharClass cls;
    std::vector<NodePtr> children;  // Concat, Alt
    NodePtr child;                  // Rep
    int rep_min = 0;
    int rep_max = 0;  // -1 = unbounded
};

NodePtr make_node(Node n) { return std::make_shared<const Node>(std::move(n)); }

// ---- parser ---------------------------------------------------------

struct Parser {
    const std::vector<uint32_t>& cps;
    std::size_t pos = 0;
    int depth = 0;
    bool failed = false;
    PatternError err;

    NodePtr fail(std::string reason, std::size_t at) {
        if (!failed) {
            failed = true;
            err = {std::move(reason), at};
        }
        return nullptr;
    }

    bool at_end() const { return pos >= cps.size(); }
    uint32_t peek(std::size_t ahead = 0) const {
        return pos + ahead < cps.size() ? cps[pos + ahead] : 0;
    }

    NodePtr parse_alt() {
        std::vector<NodePtr> parts;
        NodePtr first = parse_concat();
        if (failed) return nullptr;
        parts.push_back(first);
        while (!at_end() && peek() == '|') {
            ++pos;
            NodePtr next = parse_concat();
            if (failed) return nullptr;
            parts.push_back(next);
        }
        if (parts.size() == 1) return parts[0];
        Node n;
        n.kind = Node::Kind::Alt;
        n.children = std::move(parts);
        return make_node(std::move(n));
    }

    NodePtr parse_concat() {
        std::vector<NodePtr> items;
        while (!at_end() && peek() != '|' && peek() != ')') {
            NodePtr item = parse_repeat();
            if (failed) return nullptr;
            items.push_back(item);
        }
        if (items.empty()) return make_node(Node{});
        if (items.size() == 1) return items[0];
        Node n;
        n.kind = Node::Kind::Concat;
        n.children = std::move(items);
        return make_node(std::move(n));
    }

    static bool is_quantifier_start(uint32_t c) {
        return c == '*' || c == '+' || c == '?' || c == '{';
    }

    NodePtr parse_repeat() {
        std::size_t atom_at = pos;
        NodePtr atom = parse_atom();
        if (failed) return nullptr;
        if (at_end() || !is_quantifier_start(peek())) return atom;

        if (atom->kind == Node::Kind::Begin || atom->kind == Node::Kind::End)
            return fail("quantifier applied to an anchor", pos);
        (void)atom_at;

        int min = 0, max = 0;
        uint32_t q = peek();
        std::size_t q_at = pos;
        if (q == '*') {
            ++pos;
            min = 0;
            max = -1;
        } else if (q == '+') {
            ++pos;
            min = 1;
            max = -1;
        } else if (q == '?') {
            ++pos;
            min = 0;
            max = 1;
        } else {  // '{'
            ++pos;
            if (!parse_bounds(min, max)) return nullptr;
        }
        if (!at_end()) {
            uint32_t after = peek();
            if (after == '?')
                return fail("lazy quantifiers are not supported", pos);
            if (after == '*' || after == '{')
                return fail("multiple repeat", pos);
            if (after == '+')
                return fail(q == '{' ? "multiple repeat" : "possessive quantifiers are not supported",
                            pos);
        }
        (void)q_at;
        Node n;
        n.kind = Node::Kind::Rep;
        n.child = atom;
        n.rep_min = min;
        n.rep_max = max;
        return make_node(std::move(n));
    }

    // pos is just past '{'
    bool parse_bounds(int& min, int& max) {
        std::size_t start = pos - 1;
        auto read_int = [&](int& out) -> bool {
            if (at_end() || peek() < '0' || peek() > '9') return false;
            long v = 0;
            while (!at_end() && peek() >= '0' && peek() <= '9') {
                v = v * 10 + int(peek() - '0');
                if (v > kMaxRepetition) {
                    fail("repetition bound too large", start);
                    return false;
                }
                ++pos;
            }
            out = int(v);
            return true;
        };
        if (!read_int(min)) {
            if (!failed) fail("bad repetition (escape literal braces as \\{)", start);
            return false;
        }
        if (!at_end() && peek() == '}') {
            ++pos;
            max = min;
            return true;
        }
        if (at_end() || peek() != ',') {
            fail("bad repetition (escape literal braces as \\{)", start);
            return false;
        }
        ++pos;
        if (!at_end() && peek() == '}') {
            ++pos;
            max = -1;
            return true;
        }
        if (!read_int(max)) {
            if (!failed) fail("bad repetition (escape literal braces as \\{)", start);
            return false;
        }
        if (at_end() || peek() != '}') {
            fail("bad repetition (escape literal braces as \\{)", start);
            return false;
        }
        ++pos;
        if (min > max) {
            fail("bad repetition: min exceeds max", start);
            return false;
        }
        return true;
    }

    NodePtr parse_atom() {
        if (at_end()) return fail("expected an atom", pos);
        uint32_t c = peek();
        switch (c) {
            case '(': {
                std::size_t open_at = pos;
                ++pos;
                if (!at_end() && peek() == '?')
                    return fail("group constructs '(?...' (lookaround, flags) are not supported",
                                pos);
                if (++depth > kMaxGroupDepth) return fail("groups nested too deeply", pos);
                NodePtr inner = parse_alt();
                --depth;
                if (failed) return nullptr;
                if (at_end() || peek() != ')') return fail("unbalanced group", open_at);
                ++pos;
                return inner;
            }
            case '[':
                ++pos;
                return parse_class();
            case '.': {
                ++pos;
                Node n;
                n.kind = Node::Kind::Any;
                return make_node(std::move(n));
            }
            case '^': {
                ++pos;
                Node n;
                n.kind = Node::Kind::Begin;
                return make_node(std::move(n));
            }
            case '$': {
                ++pos;
                Node n;
                n.kind = Node::Kind::End;
                return make_node(std::move(n));
            }
            case '*':
            case '+':
            case '?':
                return fail("nothing to repeat", pos);
            case '{':
                return fail("bad repetition: '{' must follow a repeatable element "
                            "(escape literal braces as \\{)",
                            pos);
            case '}':
                return fail("unescaped '}' (escape as \\})", pos);
            case '\\':
                return parse_escape();
            default: {
                ++pos;
                Node n;
                n.kind = Node::Kind::Literal;
                n.cp = c;
                return make_node(std::move(n));
            }
        }
    }

    NodePtr class_node(std::vector<std::pair<uint32_t, uint32_t>> rs) {
        Node n;
        n.kind = Node::Kind::Class;
        normalize(rs);
        n.cls.ranges = std::move(rs);
        return make_node(std::move(n));
    }

    NodePtr literal_node(uint32_t cp) {
        Node n;
        n.kind = Node::Kind::Literal;
        n.cp = cp;
        return make_node(std::move(n));
    }

    NodePtr parse_escape() {
        std::size_t at = pos;
        ++pos;  // consume backslash
        if (at_end()) return fail("trailing backslash", at);
        uint32_t c = peek();
        ++pos;
        switch (c) {
            case 'd': return class_node(digit_ranges());
            case 'D': return class_node(complement(digit_ranges()));
            case 'w': return class_node(word_ranges());
            case 'W': return class_node(complement(word_ranges()));
            case 's': return class_node(space_ranges());
            case 'S': return class_node(complement(space_ranges()));
            case 'n': return literal_node('\n');
            case 't': return literal_node('\t');
            case 'r': return literal_node('\r');
            case 'f': return literal_node('\f');
            case 'v': return literal_node('\v');
            case '1': case '2': case '3': case '4': case '5':
            case '6': case '7': case '8': case '9':
                return fail("backreferences are not supported", at);
            case 'b': case 'B': case 'A': case 'Z': case 'z':
                return fail("escape-based assertions are not supported", at);
            default:
                if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9'))
                    return fail("unsupported escape", at);
                return literal_node(c);
        }
    }

    // pos is just past '['
    NodePtr parse_class() {
        std::size_t open_at = pos - 1;
        bool negated = false;
        if (!at_end() && peek() == '^') {
            negated = true;
            ++pos;
        }
        std::vector<std::pair<uint32_t, uint32_t>> ranges;
        bool first = true;
        while (true) {
            if (at_end()) return fail("unterminated character class", open_at);
            uint32_t c = peek();
            if (c == ']' && !first) {
                ++pos;
                break;
            }
            first = false;
            bool lo_is_set = false;
            uint32_t lo = 0;
            if (c == '\\') {
                std::size_t esc_at = pos;
                ++pos;
                if (at_end()) return fail("trailing backslash in character class", esc_at);
                uint32_t e = peek();
                ++pos;
                switch (e) {
                    case 'd': append(ranges, digit_ranges()); lo_is_set = true; break;
                    case 'D': append(ranges, complement(digit_ranges())); lo_is_set = true; break;
                    case 'w': append(ranges, word_ranges()); lo_is_set = true; break;
                    case 'W': append(ranges, complement(word_ranges())); lo_is_set = true; break;
                    case 's': append(ranges, space_ranges()); lo_is_set = true; break;
                    case 'S': append(ranges, complement(space_ranges())); lo_is_set = true; break;
                    case 'n': lo = '\n'; break;
                    case 't': lo = '\t'; break;
                    case 'r': lo = '\r'; break;
                    case 'f': lo = '\f'; break;
                    case 'v': lo = '\v'; break;
                    default:
                        if ((e >= 'a' && e <= 'z') || (e >= 'A' && e <= 'Z') ||
                            (e >= '0' && e <= '9'))
                            return fail("unsupported escape in character class", esc_at);
                        lo = e;
                        break;
                }
                if (lo_is_set) {
                    // A multi-character set cannot anchor a range.
                    if (!at_end() && peek() == '-' && peek(1) != ']' && pos + 1 < cps.size())
                        return fail("bad class range", pos);
                    continue;
                }
            } else {
                lo = c;
                ++pos;
            }
            if (!at_end() && peek() == '-' && peek(1) != ']' && pos + 1 < cps.size()) {
                ++pos;  // consume '-'
                uint32_t hi = 0;
                if (peek() == '\\') {
                    std::size_t esc_at = pos;
                    ++pos;
                    if (at_end()) return fail("trailing backslash in character class", esc_at);
                    uint32_t e = peek();
                    ++pos;
                    switch (e) {
                        case 'n': hi = '\n'; break;
                        case 't': hi = '\t'; break;
                        case 'r': hi = '\r'; break;
                        case 'f': hi = '\f'; break;
                        case 'v': hi = '\v'; break;
                        case 'd': case 'D': case 'w': case 'W': case 's': case 'S':
                            return fail("bad class range", esc_at);
                        default:
                            if ((e >= 'a' && e <= 'z') || (e >= 'A' && e <= 'Z') ||
                                (e >= '0' && e <= '9'))
                                return fail("unsupported escape in character class", esc_at);
                            hi = e;
                            break;
                    }
                } else {
                    hi = peek();
                    ++pos;
                }
                if (lo > hi) return fail("reversed class range", open_at);
                ranges.emplace_back(lo, hi);
            } else {
                ranges.emplace_back(lo, lo);
            }
        }
        Node n;
        n.kind = Node::Kind::Class;
        normalize(ranges);
        n.cls.ranges = std::move(ranges);
        n.cls.negated = negated;
        return make_node(std::move(n));
    }

    static void append(std::vector<std::pair<uint32_t, uint32_t>>& dst,
                       std::vector<std::pair<uint32_t, uint32_t>> src) {
        dst.insert(dst.end(), src.begin(), src.end());
    }
};

}  // namespace

// ---- compiled program ------------------------------------------------

struct Program {
    struct State {
        enum class Kind : uint8_t { Char, Class, Any, Split, AssertBegin, AssertEnd, Accept };
        Kind kind = Kind::Split;
        uint32_t cp = 0;
        int cls = -1;
        int next = -1;
        int next2 = -1;
    };
    std::vector<State> states;
    std::vector<CharClass> classes;
    int start = -1;
};

namespace {

struct Frag {
    int start = -1;
    std::vector<std::pair<int, int>> outs;  // (state, slot): slot 0 = next, 1 = next2
};

class Builder {
public:
    explicit Builder(Program& prog) : prog_(prog) {}

    bool build_root(const NodePtr& root) {
        Frag f;
        if (!build(root, f)) return false;
        int acc = add_state(Program::State::Kind::Accept);
        if (acc < 0) return false;
        patch(f.outs, acc);
        prog_.start = f.start;
        return true;
    }

    bool overflowed() const { return overflow_; }

private:
    int add_state(Program::State::Kind kind) {
        if (prog_.states.size() >= kMaxStates) {
            overflow_ = true;
            return -1;
        }
        prog_.states.push_back({});
        prog_.states.back().kind = kind;
        return int(prog_.states.size()) - 1;
    }

    void patch(const std::vector<std::pair<int, int>>& outs, int target) {
        for (auto [s, slot] : outs) {
            if (slot == 0)
                prog_.states[s].next = target;
            else
                prog_.states[s].next2 = target;
        }
    }

    bool build(const NodePtr& node, Frag& out) {
        switch (node->kind) {
            case Node::Kind::Empty: {
                int s = add_state(Program::State::Kind::Split);
                if (s < 0) return false;
                out = {s, {{s, 0}}};
                return true;
            }
            case Node::Kind::Literal: {
                int s = add_state(Program::State::Kind::Char);
                if (s < 0) return false;
                prog_.states[s].cp = node->cp;
                out = {s, {{s, 0}}};
                return true;
            }
            case Node::Kind::Any: {
                int s = add_state(Program::State::Kind::Any);
                if (s < 0) return false;
                out = {s, {{s, 0}}};
                return true;
            }
            case Node::Kind::Class: {
                int s = add_state(Program::State::Kind::Class);
                if (s < 0) return false;
                prog_.classes.push_back(node->cls);
                prog_.states[s].cls = int(prog_.classes.size()) - 1;
                out = {s, {{s, 0}}};
                return true;
            }
            case Node::Kind::Begin:
            case Node::Kind::End: {
                int s = add_state(node->kind == Node::Kind::Begin
                                      ? Program::State::Kind::AssertBegin
                                      : Program::State::Kind::AssertEnd);
                if (s < 0) return false;
                out = {s, {{s, 0}}};
                return true;
            }
            case Node::Kind::Concat: {
                Frag acc;
                bool have = false;
                for (const auto& ch : node->children) {
                    Frag f;
                    if (!build(ch, f)) return false;
                    if (!have) {
                        acc = f;
                        have = true;
                    } else {
                        patch(acc.outs, f.start);
                        acc.outs = f.outs;
                    }
                }
                if (!have) return build(make_node(Node{}), out);
                out = acc;
                return true;
            }
            case Node::Kind::Alt: {
                Frag acc;
                bool have = false;
                for (const auto& ch : node->children) {
                    Frag f;
                    if (!build(ch, f)) return false;
                    if (!have) {
                        acc = f;
                        have = true;
                    } else {
                        int s = add_state(Program::State::Kind::Split);
                        if (s < 0) return false;
                        prog_.states[s].next = acc.start;
                        prog_.states[s].next2 = f.start;
                        Frag merged;
                        merged.start = s;
                        merged.outs = acc.outs;
                        merged.outs.insert(merged.outs.end(), f.outs.begin(), f.outs.end());
                        acc = merged;
                    }
                }
                out = acc;
                return true;
            }
            case Node::Kind::Rep:
                return build_rep(node, out);
        }
        return false;
    }

    bool build_rep(const NodePtr& node, Frag& out) {
        int min = node->rep_min;
        int max = node->rep_max;
        std::vector<Frag> pieces;
        for (int k = 0; k < min; ++k) {
            Frag f;
            if (!build(node->child, f)) return false;
            pieces.push_back(f);
        }
        if (max == -1) {
            // X{m,} = X^m followed by X*
            int s = add_state(Program::State::Kind::Split);
            if (s < 0) return false;
            Frag body;
            if (!build(node->child, body)) return false;
            prog_.states[s].next = body.start;
            patch(body.outs, s);
            Frag star;
            star.start = s;
            star.outs = {{s, 1}};
            pieces.push_back(star);
        } else {
            for (int k = min; k < max; ++k) {
                int s = add_state(Program::State::Kind::Split);
                if (s < 0) return false;
                Frag body;
                if (!build(node->child, body)) return false;
                prog_.states[s].next = body.start;
                Frag opt;
                opt.start = s;
                opt.outs = body.outs;
                opt.outs.emplace_back(s, 1);
                pieces.push_back(opt);
            }
        }
        if (pieces.empty()) {
            int s = add_state(Program::State::Kind::Split);
            if (s < 0) return false;
            out = {s, {{s, 0}}};
            return true;
        }
        Frag acc = pieces[0];
        for (std::size_t k = 1; k < pieces.size(); ++k) {
            patch(acc.outs, pieces[k].start);
            acc.outs = pieces[k].outs;
        }
        out = acc;
        return true;
    }

    Program& prog_;
    bool overflow_ = false;
};

// Sparse simultaneous-state simulation. Worst case O(input * states);
// epsilon cycles (e.g. from nested stars) are cut off by the generation
// marks, so no input can make this loop.
class Runner {
public:
    explicit Runner(const Program& prog)
        : prog_(prog), marks_(prog.states.size(), 0) {}

    void begin_list() {
        ++gen_;
        accept_ = false;
    }

    void add(std::vector<int>& list, int s, bool at_begin, bool at_end) {
        stack_.clear();
        stack_.push_back(s);
        while (!stack_.empty()) {
            int t = stack_.back();
            stack_.pop_back();
            if (t < 0 || marks_[std::size_t(t)] == gen_) continue;
            marks_[std::size_t(t)] = gen_;
            const auto& st = prog_.states[std::size_t(t)];
            switch (st.kind) {
                case Program::State::Kind::Split:
                    if (st.next2 >= 0) stack_.push_back(st.next2);
                    if (st.next >= 0) stack_.push_back(st.next);
                    break;
                case Program::State::Kind::AssertBegin:
                    if (at_begin) stack_.push_back(st.next);
                    break;
                case Program::State::Kind::AssertEnd:
                    if (at_end) stack_.push_back(st.next);
                    break;
                case Program::State::Kind::Accept:
                    accept_ = true;
                    break;
                default:
                    list.push_back(t);
                    break;
            }
        }
    }

    bool consumes(int s, uint32_t cp) const {
        const auto& st = prog_.states[std::size_t(s)];
        switch (st.kind) {
            case Program::State::Kind::Char: return st.cp == cp;
            case Program::State::Kind::Any: return cp != '\n';
            case Program::State::Kind::Class: return prog_.classes[std::size_t(st.cls)].match(cp);
            default: return false;
        }
    }

    int next_of(int s) const { return prog_.states[std::size_t(s)].next; }
    bool accept_seen() const { return accept_; }

private:
    const Program& prog_;
    std::vector<uint32_t> marks_;
    uint32_t gen_ = 0;
    bool accept_ = false;
    std::vector<int> stack_;
};

bool run(const Program& prog, std::string_view text, bool anchored_start, bool require_end) {
    std::vector<uint32_t> cps = decode_utf8(text);
    const std::size_t n = cps.size();
    Runner runner(prog);
    std::vector<int> cur, next;
    bool accept_cur = false;
    for (std::size_t i = 0; i <= n; ++i) {
        const bool at_begin = i == 0;
        const bool at_end = i == n;
        if (!anchored_start || i == 0) {
            if (i == 0) runner.begin_list();
            runner.add(cur, prog.start, at_begin, at_end);
            accept_cur = accept_cur || runner.accept_seen();
        }
        if (accept_cur && (!require_end || at_end)) return true;
        if (at_end) break;
        if (cur.empty() && anchored_start) return false;
        next.clear();
        runner.begin_list();
        const bool nb = false;
        const bool ne = i + 1 == n;
        for (int s : cur)
            if (runner.consumes(s, cps[i])) runner.add(next, runner.next_of(s), nb, ne);
        cur.swap(next);
        accept_cur = runner.accept_seen();
    }
    return false;
}

}  // namespace
}  // namespace rex

bool Pattern::search(std::string_view text) const {
    if (!program_) return false;
    return rex::run(*program_, text, /*anchored_start=*/false, /*require_end=*/false);
}

bool Pattern::fullmatch(std::string_view text) const {
    if (!program_) return false;
    return rex::run(*program_, text, /*anchored_start=*/true, /*require_end=*/true);
}

std::optional<std::size_t> Pattern::match_end_at(std::string_view text,
                                                 std::size_t byte_pos) const {
    if (!program_) return std::nullopt;
    std::vector<std::size_t> offsets;
    std::vector<uint32_t> cps = rex::decode_utf8(text, &offsets);
    const std::size_t n = cps.size();
    std::size_t j = n + 1;
    for (std::size_t k = 0; k <= n; ++k) {
        if (offsets[k] == byte_pos) {
            j = k;
            break;
        }
        if (offsets[k] > byte_pos) break;
    }
    if (j > n) return std::nullopt;  // not a code-point boundary

    rex::Runner runner(*program_);
    std::vector<int> cur, next;
    runner.begin_list();
    runner.add(cur, program_->start, j == 0, j == n);
    long best = runner.accept_seen() ? long(j) : -1;
    for (std::size_t i = j; i < n; ++i) {
        if (cur.empty()) break;
        next.clear();
        runner.begin_list();
        for (int s : cur)
            if (runner.consumes(s, cps[i])) runner.add(next, runner.next_of(s), false, i + 1 == n);
        cur.swap(next);
        if (runner.accept_seen()) best = long(i) + 1;
    }
    if (best < 0) return std::nullopt;
    return offsets[std::size_t(best)];
}

std::size_t Pattern::state_count() const { return program_ ? program_->states.size() : 0; }

Result<Pattern, PatternError> compile_pattern(std::string_view src) {
    std::vector<uint32_t> cps = rex::decode_utf8(src);
    rex::Parser parser{cps};
    rex::NodePtr root = parser.parse_alt();
    if (parser.failed) return parser.err;
    if (parser.pos != cps.size()) {
        if (parser.peek() == ')') return PatternError{"unbalanced group", parser.pos};
        return PatternError{"unexpected character", parser.pos};
    }
    auto program = std::make_shared<rex::Program>();
    rex::Builder builder(*program);
    if (!builder.build_root(root)) {
        if (builder.overflowed())
            return PatternError{"pattern too large (state limit exceeded)", 0};
        return PatternError{"internal compile failure", 0};
    }
    Pattern p;
    p.source_ = std::string(src);
    p.program_ = std::move(program);
    return p;
}

}  // namespace conseca
