#include "conseca/enforcer.hpp"

namespace conseca {

Decision is_allowed(const ToolCommand& cmd, const Policy& policy, const ApiRegistry& registry) {
    auto it = policy.constraints.find(cmd.api_name);
    if (it == policy.constraints.end())
        return {false, std::string(kDenyByDefaultRationale), std::nullopt};

    const ApiConstraint& constraint = it->second;
    if (!constraint.can_execute)
        return {false, constraint.rationale, cmd.api_name};

    // Arity underflow is a denial, not an error: the planner treats it
    // like any other refusal and may retry with a corrected call.
    if (const ApiCallSpec* spec = registry.find(cmd.api_name)) {
        if (cmd.args.size() < spec->required_count) {
            std::string rationale = cmd.api_name + " requires at least " +
                                    std::to_string(spec->required_count) + " argument" +
                                    (spec->required_count == 1 ? "" : "s") + ", got " +
                                    std::to_string(cmd.args.size());
            return {false, std::move(rationale), cmd.api_name};
        }
    }

    bool ok = eval_expr(*constraint.args, cmd.args);
    return {ok, constraint.rationale, cmd.api_name};
}

}  // namespace conseca
