#include "conseca/policy.hpp"

#include <set>

#include "json.hpp"

namespace conseca {

namespace {

using nlohmann::json;

std::string json_string(std::string_view s) { return json(s).dump(); }

const std::set<std::string, std::less<>>& deletion_calls() {
    static const std::set<std::string, std::less<>> calls = {"rm", "rmdir", "delete_email"};
    return calls;
}

}  // namespace

std::string_view to_string(PolicyMode mode) {
    switch (mode) {
        case PolicyMode::none: return "none";
        case PolicyMode::static_permissive: return "static_permissive";
        case PolicyMode::static_restrictive: return "static_restrictive";
        case PolicyMode::contextual: return "contextual";
    }
    return "none";
}

std::optional<PolicyMode> policy_mode_from(std::string_view name) {
    if (name == "none") return PolicyMode::none;
    if (name == "static_permissive" || name == "permissive") return PolicyMode::static_permissive;
    if (name == "static_restrictive" || name == "restrictive")
        return PolicyMode::static_restrictive;
    if (name == "contextual") return PolicyMode::contextual;
    return std::nullopt;
}

Result<ApiRegistry, std::string> ApiRegistry::build(const std::vector<ToolApiDoc>& docs) {
    ApiRegistry reg;
    for (const auto& doc : docs) {
        for (const auto& call : doc.calls) {
            if (call.name.empty()) return std::string("api call with empty name in tool '" + doc.tool_name + "'");
            if (call.required_count > call.params.size())
                return std::string("api '" + call.name + "': required_count exceeds parameter list");
            if (!reg.calls_.emplace(call.name, call).second)
                return std::string("duplicate api name across tools: '" + call.name + "'");
        }
    }
    return reg;
}

const ApiCallSpec* ApiRegistry::find(std::string_view api_name) const {
    auto it = calls_.find(api_name);
    return it == calls_.end() ? nullptr : &it->second;
}

bool policy_equal(const Policy& a, const Policy& b) {
    if (a.task != b.task) return false;
    if (a.constraints.size() != b.constraints.size()) return false;
    auto ia = a.constraints.begin();
    auto ib = b.constraints.begin();
    for (; ia != a.constraints.end(); ++ia, ++ib) {
        if (ia->first != ib->first) return false;
        const ApiConstraint& ca = ia->second;
        const ApiConstraint& cb = ib->second;
        if (ca.can_execute != cb.can_execute || ca.rationale != cb.rationale) return false;
        if (bool(ca.args) != bool(cb.args)) return false;
        if (ca.args && !expr_equal(*ca.args, *cb.args)) return false;
    }
    return true;
}

std::string serialize_policy(const Policy& policy) {
    std::string out;
    out += "{\"task\": " + json_string(policy.task) + ",\n";
    out += " \"default\": \"deny\",\n";
    if (policy.constraints.empty()) {
        out += " \"constraints\": {}}\n";
        return out;
    }
    out += " \"constraints\": {\n";
    std::size_t i = 0;
    for (const auto& [api, c] : policy.constraints) {
        out += "  " + json_string(api) + ": {\"can_execute\": ";
        out += c.can_execute ? "true" : "false";
        if (c.can_execute) out += ", \"args\": " + json_string(to_text(*c.args));
        out += ", \"rationale\": " + json_string(c.rationale) + "}";
        out += ++i == policy.constraints.size() ? "\n" : ",\n";
    }
    out += " }}\n";
    return out;
}

namespace {

// nlohmann silently keeps the last value for duplicate object keys, so
// duplicates are caught with a parse callback instead.
bool has_duplicate_keys(std::string_view text) {
    std::vector<std::set<std::string>> stack;
    bool duplicate = false;
    json::parser_callback_t cb = [&](int /*depth*/, json::parse_event_t event,
                                     json& parsed) -> bool {
        switch (event) {
            case json::parse_event_t::object_start:
                stack.emplace_back();
                break;
            case json::parse_event_t::object_end:
                if (!stack.empty()) stack.pop_back();
                break;
            case json::parse_event_t::key:
                if (!stack.empty() &&
                    !stack.back().insert(parsed.get<std::string>()).second)
                    duplicate = true;
                break;
            default:
                break;
        }
        return true;
    };
    json parsed = json::parse(text, cb, false);
    (void)parsed;
    return duplicate;
}

}  // namespace

Result<Policy, PolicyParseError> parse_policy(std::string_view text) {
    using Kind = PolicyParseError::Kind;
    json root = json::parse(text, nullptr, false);
    if (root.is_discarded())
        return PolicyParseError{Kind::MalformedPolicy, "not valid JSON"};
    if (has_duplicate_keys(text))
        return PolicyParseError{Kind::MalformedPolicy, "duplicate object key"};
    if (!root.is_object())
        return PolicyParseError{Kind::MalformedPolicy, "top level must be an object"};
    for (const auto& [key, _] : root.items()) {
        if (key != "task" && key != "default" && key != "constraints")
            return PolicyParseError{Kind::MalformedPolicy, "unknown field '" + key + "'"};
    }
    if (!root.contains("task") || !root["task"].is_string())
        return PolicyParseError{Kind::MalformedPolicy, "missing or non-string 'task'"};
    if (!root.contains("default") || root["default"] != "deny")
        return PolicyParseError{Kind::MalformedPolicy, "'default' must be \"deny\""};
    if (!root.contains("constraints") || !root["constraints"].is_object())
        return PolicyParseError{Kind::MalformedPolicy, "missing or non-object 'constraints'"};

    Policy policy;
    policy.task = root["task"].get<std::string>();
    for (const auto& [api, entry] : root["constraints"].items()) {
        if (api.empty())
            return PolicyParseError{Kind::MalformedPolicy, "empty api name"};
        if (!entry.is_object())
            return PolicyParseError{Kind::MalformedPolicy, "constraint for '" + api + "' must be an object"};
        for (const auto& [key, _] : entry.items()) {
            if (key != "can_execute" && key != "args" && key != "rationale")
                return PolicyParseError{Kind::MalformedPolicy,
                                        "unknown constraint field '" + key + "' on '" + api + "'"};
        }
        if (!entry.contains("can_execute") || !entry["can_execute"].is_boolean())
            return PolicyParseError{Kind::MalformedPolicy,
                                    "missing or non-boolean 'can_execute' on '" + api + "'"};
        if (!entry.contains("rationale") || !entry["rationale"].is_string())
            return PolicyParseError{Kind::MalformedPolicy,
                                    "missing or non-string 'rationale' on '" + api + "'"};
        ApiConstraint c;
        c.can_execute = entry["can_execute"].get<bool>();
        c.rationale = entry["rationale"].get<std::string>();
        if (c.rationale.empty())
            return PolicyParseError{Kind::MissingRationale, "empty rationale on '" + api + "'"};
        if (entry.contains("args")) {
            if (!c.can_execute)
                return PolicyParseError{Kind::MalformedPolicy,
                                        "'args' present on denied entry '" + api + "'"};
            if (!entry["args"].is_string())
                return PolicyParseError{Kind::MalformedPolicy,
                                        "non-string 'args' on '" + api + "'"};
            auto parsed = parse_expr(entry["args"].get<std::string>());
            if (!parsed)
                return PolicyParseError{Kind::BadExpression,
                                        "bad args expression on '" + api + "': " +
                                            parsed.error().message};
            c.args = parsed.take();
        } else if (c.can_execute) {
            c.args = ConstraintExpr::make_true();
        }
        policy.constraints.emplace(api, std::move(c));
    }
    return policy;
}

Result<Policy, StaticPolicyError> static_policy(PolicyMode mode,
                                                const std::vector<ToolApiDoc>& docs) {
    if (mode != PolicyMode::static_permissive && mode != PolicyMode::static_restrictive)
        return StaticPolicyError{std::string("unsupported mode for static_policy: ") +
                                 std::string(to_string(mode))};
    Policy policy;
    for (const auto& doc : docs) {
        for (const auto& call : doc.calls) {
            ApiConstraint c;
            if (mode == PolicyMode::static_restrictive) {
                if (call.mutating) {
                    c.can_execute = false;
                    c.rationale = "Static restrictive policy: mutating actions are not permitted.";
                } else {
                    c.can_execute = true;
                    c.args = ConstraintExpr::make_true();
                    c.rationale = "Static restrictive policy: read-only actions are permitted.";
                }
            } else {
                if (deletion_calls().count(call.name) != 0) {
                    c.can_execute = false;
                    c.rationale = "Static permissive policy: deletion actions are not permitted.";
                } else {
                    c.can_execute = true;
                    c.args = ConstraintExpr::make_true();
                    c.rationale =
                        "Static permissive policy: all actions except deletion are permitted.";
                }
            }
            policy.constraints.emplace(call.name, std::move(c));
        }
    }
    return policy;
}

}  // namespace conseca
