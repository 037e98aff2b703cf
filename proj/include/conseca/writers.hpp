#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "conseca/context.hpp"
#include "conseca/policy.hpp"
#include "conseca/result.hpp"

namespace conseca {

/// Exemplar policy included in writer prompts for in-context learning.
struct GoldenExample {
    std::string task;
    std::string context_digest;
    Policy policy;
};

enum class WriterKind { template_writer, external_model };

/// Rule table driving the deterministic template writer. This is data,
/// not code: the default table is an embedded JSON document and any
/// table with the same shape can be loaded at runtime.
///
/// Intents fire on lowercase substring keywords in the task; earlier
/// intents win when two rules target the same API. Rule args templates
/// are constraint expressions with {user} / {at_domain} / {home} /
/// {user_address} placeholders, substituted after literal-escaping so a
/// context value can never inject pattern syntax. Guards emit an
/// explicit can_execute:false entry when a related intent fired but no
/// granting intent did.
struct RuleTable {
    struct Rule {
        std::string api;
        std::string args_template;
        std::string rationale_template;
    };
    struct Intent {
        std::string name;
        std::vector<std::string> keywords;
        std::vector<Rule> rules;
    };
    struct Guard {
        std::string api;
        std::vector<std::string> granted_by;
        std::vector<std::string> triggered_by;
        std::string rationale;
    };
    std::vector<Intent> intents;
    std::vector<Guard> guards;
};

std::string_view default_rule_table_json();
const RuleTable& default_rule_table();
Result<RuleTable, std::string> parse_rule_table(std::string_view json_text);

struct WriterConfig {
    WriterKind kind = WriterKind::template_writer;
    std::string endpoint;    // external_model only
    std::string model_name;  // external_model only
    std::vector<GoldenExample> golden_set;
    std::optional<RuleTable> rule_table;  // template writer override
    bool debug = false;
};

/// Escapes s so that, compiled as a pattern, it matches exactly the
/// literal s and nothing more.
std::string escape_literal(std::string_view s);

/// Deterministic rule-table policy writer. Unmatched tasks yield an
/// empty constraint map — everything denied.
Policy write_policy_template(const std::string& task, const TrustedContextBundle& bundle,
                             const std::vector<ToolApiDoc>& docs);
Policy write_policy_template(const std::string& task, const TrustedContextBundle& bundle,
                             const std::vector<ToolApiDoc>& docs, const RuleTable& table);

/// Deterministic concatenation: tool docs, golden examples, output
/// format instructions, the task, then the bundle's sorted lines.
std::string assemble_prompt(const std::string& task, const TrustedContextBundle& bundle,
                            const std::vector<ToolApiDoc>& docs,
                            const std::vector<GoldenExample>& goldens);

struct Violation {
    enum class Kind { UnknownApi, ArgRefOutOfRange, MissingRationale, InvalidDocs };
    Kind kind;
    std::string api;
    std::string detail;
};

/// Mechanical policy checks against the tool docs: constrained APIs
/// must exist, $N references must stay within the declared parameter
/// list, rationales must be non-empty. (Patterns are compiled at parse
/// time, so "patterns compile" holds by construction here.)
std::vector<Violation> validate_policy(const Policy& policy, const std::vector<ToolApiDoc>& docs);

struct ModelWriterError {
    enum class Kind { Unparseable, ValidationFailed, Transport };
    Kind kind;
    std::string message;
    std::vector<Violation> violations;
};

/// Parses a model response into a policy, tolerating surrounding prose
/// and markdown fences, then validates it against the docs.
Result<Policy, ModelWriterError> parse_model_response(std::string_view response,
                                                      const std::vector<ToolApiDoc>& docs);

/// Calls a chat-completion endpoint to write the policy. One retry with
/// the error appended to the prompt, then failure. The API key is read
/// from the CONSECA_MODEL_KEY environment variable and never logged.
Result<Policy, ModelWriterError> write_policy_model(const std::string& task,
                                                    const TrustedContextBundle& bundle,
                                                    const std::vector<ToolApiDoc>& docs,
                                                    const WriterConfig& config);

/// Three artifact-authored golden examples that validate against the
/// default tool docs.
std::vector<GoldenExample> default_golden_examples();

/// Human-readable rendering of the tool docs (also used in prompts).
std::string render_tool_docs(const std::vector<ToolApiDoc>& docs);

}  // namespace conseca
