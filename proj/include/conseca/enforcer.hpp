#pragma once

#include <optional>
#include <string>

#include "conseca/command.hpp"
#include "conseca/policy.hpp"

namespace conseca {

/// Outcome of a policy check. The rationale is always present, for
/// allows and denies alike, and is handed back to the planner verbatim.
struct Decision {
    bool allowed = false;
    std::string rationale;
    std::optional<std::string> matched_api;  // set when a constraint entry was consulted
};

inline constexpr std::string_view kDenyByDefaultRationale =
    "no constraint grants this API call in the current context";

/// Pure decision function, deny-by-default:
///  1. api_name absent from the policy        -> deny (default rationale)
///  2. can_execute is false                   -> deny (stored rationale)
///  3. fewer args than the API requires       -> deny (arity rationale)
///  4. otherwise allowed = eval of args expr  -> stored rationale either way
/// APIs unknown to the registry skip the arity check (required count 0).
Decision is_allowed(const ToolCommand& cmd, const Policy& policy, const ApiRegistry& registry);

/// Paper-shaped wrapper holding the tool docs.
class Enforcer {
public:
    explicit Enforcer(ApiRegistry registry) : registry_(std::move(registry)) {}

    Decision is_allowed(const ToolCommand& cmd, const Policy& policy) const {
        return conseca::is_allowed(cmd, policy, registry_);
    }

    const ApiRegistry& registry() const { return registry_; }

private:
    ApiRegistry registry_;
};

}  // namespace conseca
