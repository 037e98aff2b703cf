#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "conseca/result.hpp"

namespace conseca {

/// One proposed action: an API name plus positional argument texts.
struct ToolCommand {
    std::string api_name;
    std::vector<std::string> args;
    std::string raw;
};

struct CommandError {
    enum class Kind { EmptyCommand, UnterminatedQuote, ForbiddenConstruct };
    Kind kind = Kind::EmptyCommand;
    std::string message;
    std::size_t position = 0;
};

/// Tokenizes a proposed action. Whitespace separates tokens; single
/// quotes take their contents literally; double quotes recognize the
/// escapes \" and \\ (any other backslash is literal). There is no
/// variable expansion, globbing, or tilde expansion — arguments are
/// always literal.
///
/// Any unquoted occurrence of ; | & > < ` ( ) or a newline is a
/// ForbiddenConstruct: those could chain or redirect actions, and one
/// proposed action must stay exactly one API call.
Result<ToolCommand, CommandError> parse_command(std::string_view raw);

/// Canonical re-serialization: args that contain whitespace or shell
/// metacharacters come back single-quoted (double-quoted when they
/// contain a single quote). parse_command(to_shell_text(c)) always
/// reproduces (api_name, args).
std::string to_shell_text(const ToolCommand& cmd);

}  // namespace conseca
