#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "conseca/constraint.hpp"
#include "conseca/result.hpp"

namespace conseca {

enum class PolicyMode { none, static_permissive, static_restrictive, contextual };

std::string_view to_string(PolicyMode mode);
std::optional<PolicyMode> policy_mode_from(std::string_view name);

struct ApiParam {
    std::string name;
    std::string description;
};

/// One callable tool API. Parameters are positional; the required ones
/// come first, optional ones last. Extra trailing arguments beyond the
/// declared list are tolerated at enforcement time (variadic calls).
struct ApiCallSpec {
    std::string name;
    std::vector<ApiParam> params;
    std::size_t required_count = 0;
    bool mutating = false;
    std::string doc;
};

struct ToolApiDoc {
    std::string tool_name;
    std::vector<ApiCallSpec> calls;
};

/// Flattened call table over a set of tool docs. Building it validates
/// that call names are unique across all tools and that required_count
/// never exceeds the declared parameter list.
class ApiRegistry {
public:
    static Result<ApiRegistry, std::string> build(const std::vector<ToolApiDoc>& docs);

    const ApiCallSpec* find(std::string_view api_name) const;

private:
    std::map<std::string, ApiCallSpec, std::less<>> calls_;
};

/// Per-API decision entry. args is present iff can_execute; a missing
/// args on an executable entry is normalized to the constant `true`
/// expression at parse time so the enforcer only ever sees one shape.
struct ApiConstraint {
    bool can_execute = false;
    ExprPtr args;           // null iff !can_execute
    std::string rationale;  // never empty
};

/// Deny-by-default policy: any API without an entry is refused. The
/// default decision is a constant, not a field — it cannot be
/// configured away.
struct Policy {
    std::string task;
    std::map<std::string, ApiConstraint> constraints;

    static constexpr std::string_view default_decision = "deny";
};

bool policy_equal(const Policy& a, const Policy& b);

/// Canonical serialization: JSON with the top-level order task /
/// default / constraints, constraint keys sorted, field order
/// can_execute / args / rationale, "args" omitted on denied entries,
/// LF line endings, trailing newline. Byte-stable for equal policies.
std::string serialize_policy(const Policy& policy);

struct PolicyParseError {
    enum class Kind { MalformedPolicy, BadExpression, MissingRationale };
    Kind kind = Kind::MalformedPolicy;
    std::string message;
};

/// Inverse of serialize_policy; tolerant of whitespace variation but
/// strict about structure (unknown fields, duplicate keys, args on a
/// denied entry, and non-"deny" defaults are all rejected).
Result<Policy, PolicyParseError> parse_policy(std::string_view text);

struct StaticPolicyError {
    std::string message;  // UnsupportedMode
};

/// The two static baselines: restrictive denies every mutating call
/// and permits the rest; permissive denies only the deletion calls
/// (rm, rmdir, delete_email) and permits everything else.
Result<Policy, StaticPolicyError> static_policy(PolicyMode mode,
                                                const std::vector<ToolApiDoc>& docs);

}  // namespace conseca
