#include "conseca/command.hpp"

namespace conseca {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t'; }

bool is_forbidden(char c) {
    switch (c) {
        case ';': case '|': case '&': case '>': case '<':
        case '`': case '(': case ')': case '\n': case '\r':
            return true;
        default:
            return false;
    }
}

const char* forbidden_name(char c) {
    switch (c) {
        case ';': return "';'";
        case '|': return "'|'";
        case '&': return "'&'";
        case '>': return "'>'";
        case '<': return "'<'";
        case '`': return "'`'";
        case '(': return "'('";
        case ')': return "')'";
        default: return "newline";
    }
}

bool needs_quoting(char c) {
    return is_space(c) || is_forbidden(c) || c == '\'' || c == '"' || c == '\\' || c == '$' ||
           c == '*' || c == '?' || c == '~' || c == '#';
}

}  // namespace

Result<ToolCommand, CommandError> parse_command(std::string_view raw) {
    using Kind = CommandError::Kind;
    std::vector<std::string> tokens;
    std::string current;
    bool in_token = false;

    std::size_t i = 0;
    const std::size_t n = raw.size();
    while (i < n) {
        char c = raw[i];
        if (is_space(c)) {
            if (in_token) {
                tokens.push_back(current);
                current.clear();
                in_token = false;
            }
            ++i;
            continue;
        }
        if (is_forbidden(c))
            return CommandError{Kind::ForbiddenConstruct,
                                std::string("unquoted ") + forbidden_name(c) +
                                    " could chain or redirect actions",
                                i};
        if (c == '\'') {
            std::size_t open = i++;
            in_token = true;
            while (i < n && raw[i] != '\'') current.push_back(raw[i++]);
            if (i >= n)
                return CommandError{Kind::UnterminatedQuote, "unterminated single quote", open};
            ++i;  // closing quote
            continue;
        }
        if (c == '"') {
            std::size_t open = i++;
            in_token = true;
            while (i < n && raw[i] != '"') {
                if (raw[i] == '\\' && i + 1 < n && (raw[i + 1] == '"' || raw[i + 1] == '\\')) {
                    current.push_back(raw[i + 1]);
                    i += 2;
                } else {
                    current.push_back(raw[i++]);
                }
            }
            if (i >= n)
                return CommandError{Kind::UnterminatedQuote, "unterminated double quote", open};
            ++i;
            continue;
        }
        in_token = true;
        current.push_back(c);
        ++i;
    }
    if (in_token) tokens.push_back(current);

    if (tokens.empty())
        return CommandError{Kind::EmptyCommand, "empty command", 0};
    if (tokens[0].empty())
        return CommandError{Kind::EmptyCommand, "empty api name", 0};

    ToolCommand cmd;
    cmd.api_name = tokens[0];
    cmd.args.assign(tokens.begin() + 1, tokens.end());
    cmd.raw = std::string(raw);
    return cmd;
}

namespace {

std::string quote_token(const std::string& tok) {
    if (tok.empty()) return "''";
    bool plain = true;
    bool has_single = false;
    for (char c : tok) {
        if (needs_quoting(c)) plain = false;
        if (c == '\'') has_single = true;
    }
    if (plain) return tok;
    if (!has_single) return "'" + tok + "'";
    std::string out = "\"";
    for (char c : tok) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace

std::string to_shell_text(const ToolCommand& cmd) {
    std::string out = quote_token(cmd.api_name);
    for (const auto& arg : cmd.args) {
        out.push_back(' ');
        out += quote_token(arg);
    }
    return out;
}

}  // namespace conseca
