#include "conseca/writers.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>

#include "httplib.h"
#include "json.hpp"

namespace conseca {

namespace {

using nlohmann::json;

// ---- rule table -----------------------------------------------------

// The default table. Placeholders: {user}, {at_domain}, {home},
// {user_address} are pattern- and string-escaped context values;
// {raw_*} variants go into rationales unescaped.
constexpr std::string_view kDefaultRuleTable = R"RT({
  "intents": [
    {
      "name": "email-respond-urgent",
      "keywords": ["respond to any that are urgent", "that are urgent",
                   "perform the tasks in urgent emails", "urgent emails"],
      "rules": [
        {"api": "send_email",
         "args": "match($1,\"{user}\") and match($2,\"^.*{at_domain}$\") and match($3,\"urgent\")",
         "rationale": "We need to send urgent responses to emails. The sender must be '{raw_user}' (current user). The recipient must be one of the users in the email list from work. The subject must contain 'urgent'. [intent email-respond-urgent]"}
      ]
    },
    {
      "name": "email-organize",
      "keywords": ["archive", "categorize my emails", "organize email", "mail subfolders"],
      "rules": [
        {"api": "categorize_email", "args": "match($1,\"{user}\")",
         "rationale": "The task organizes the current user's mailbox, so emails in the '{raw_user}' mailbox may be categorized. [intent email-organize]"},
        {"api": "mkdir", "args": "match($1,\"^{home}\")",
         "rationale": "Mail subfolders may be created inside '{raw_home}'. [intent email-organize]"}
      ]
    },
    {
      "name": "email-delete",
      "keywords": ["delete emails", "delete any emails", "clean out my inbox", "empty the trash"],
      "rules": [
        {"api": "delete_email", "args": "match($1,\"{user}\")",
         "rationale": "The task asks for emails to be deleted from the '{raw_user}' mailbox. [intent email-delete]"}
      ]
    },
    {
      "name": "email-send",
      "keywords": ["via email", "email me", "send an email", "sending an email", "send me",
                   "email alert", "email notification", "email it", "and email", "email the",
                   "email a summary", "send summary reports", "email newsletters",
                   "emails called", "email called", "email reporting", "email confirmation"],
      "rules": [
        {"api": "send_email",
         "args": "match($1,\"{user}\") and match($2,\"^.*{at_domain}$\")",
         "rationale": "The task requires sending email. The sender must be '{raw_user}' (current user) and the recipient must be an address at a known work domain ({raw_domains}). [intent email-send]"}
      ]
    },
    {
      "name": "email-read",
      "keywords": ["unread", "my inbox", "my emails", "emails about", "emails with",
                   "from emails", "email attachments", "summarize my emails",
                   "categorize my emails", "emails from"],
      "rules": [
        {"api": "list_emails", "args": "match($1,\"{user}\")",
         "rationale": "The task requires listing the current user's mailbox. [intent email-read]"},
        {"api": "read_email", "args": "match($1,\"{user}\")",
         "rationale": "The task requires reading emails in the '{raw_user}' mailbox. [intent email-read]"}
      ]
    },
    {
      "name": "admin-audit",
      "keywords": ["audit user accounts", "user accounts", "permission"],
      "rules": [
        {"api": "ls", "args": "true",
         "rationale": "Account audits list directories across the system. [intent admin-audit]"},
        {"api": "tree", "args": "true",
         "rationale": "Account audits walk directories across the system. [intent admin-audit]"},
        {"api": "cat", "args": "match($1,\"^/home/\")",
         "rationale": "Account audits read files in user home directories. [intent admin-audit]"},
        {"api": "find", "args": "match($1,\"^/home/\")",
         "rationale": "Account audits search user home directories. [intent admin-audit]"},
        {"api": "grep", "args": "match($2,\"^/home/\")",
         "rationale": "Account audits search files in user home directories. [intent admin-audit]"}
      ]
    },
    {
      "name": "system-logs",
      "keywords": ["system logs", "authentication logs", "system update", "failed login",
                   "crashed processes", "disk space", "the logs show"],
      "rules": [
        {"api": "ls", "args": "true",
         "rationale": "System checks may list directories. [intent system-logs]"},
        {"api": "tree", "args": "true",
         "rationale": "System checks may walk the directory tree. [intent system-logs]"},
        {"api": "cat", "args": "match($1,\"^/home/(admin|{user})\")",
         "rationale": "System checks read only the admin's and the current user's files. [intent system-logs]"},
        {"api": "find", "args": "match($1,\"^/home/(admin|{user})\")",
         "rationale": "System checks search only the admin's and the current user's files. [intent system-logs]"},
        {"api": "grep", "args": "match($2,\"^/home/(admin|{user})\")",
         "rationale": "System checks search only the admin's and the current user's files. [intent system-logs]"}
      ]
    },
    {
      "name": "backup",
      "keywords": ["backup", "back up", "zip", "compress", "incremental"],
      "rules": [
        {"api": "mkdir", "args": "match($1,\"^{home}\")",
         "rationale": "Backups may create directories inside '{raw_home}'. [intent backup]"},
        {"api": "cp", "args": "match($1,\"^{home}\") and match($2,\"^{home}\")",
         "rationale": "Backups copy files within '{raw_home}'. [intent backup]"},
        {"api": "zip", "args": "match($1,\"^{home}\") and match($2,\"^{home}\")",
         "rationale": "Backups may pack archives from files within '{raw_home}'. [intent backup]"},
        {"api": "touch", "args": "match($1,\"^{home}\")",
         "rationale": "Backups may create files inside '{raw_home}'. [intent backup]"}
      ]
    },
    {
      "name": "organize-files",
      "keywords": ["sort", "organize", "category folders", "into folders"],
      "rules": [
        {"api": "mkdir", "args": "match($1,\"^{home}\")",
         "rationale": "Organizing may create folders inside '{raw_home}'. [intent organize-files]"},
        {"api": "mv", "args": "match($1,\"^{home}\") and match($2,\"^{home}\")",
         "rationale": "Organizing moves files within '{raw_home}'. [intent organize-files]"},
        {"api": "cp", "args": "match($1,\"^{home}\") and match($2,\"^{home}\")",
         "rationale": "Organizing may copy files within '{raw_home}'. [intent organize-files]"},
        {"api": "touch", "args": "match($1,\"^{home}\")",
         "rationale": "Organizing may create files inside '{raw_home}'. [intent organize-files]"}
      ]
    },
    {
      "name": "file-delete",
      "keywords": ["remove duplicate", "duplicate file", "deduplicate", "delete files",
                   "remove files"],
      "rules": [
        {"api": "rm", "args": "match($1,\"^{home}\")",
         "rationale": "The task asks for files to be removed; only files inside '{raw_home}' may go. [intent file-delete]"},
        {"api": "rmdir", "args": "match($1,\"^{home}\")",
         "rationale": "Empty directories inside '{raw_home}' may be removed. [intent file-delete]"}
      ]
    },
    {
      "name": "file-write",
      "keywords": ["file called", "create", "write", "generate", "take notes", "report",
                   "newsletter", "summar", "blog", "document"],
      "rules": [
        {"api": "touch", "args": "match($1,\"^{home}\")",
         "rationale": "The task writes files; new files stay inside '{raw_home}'. [intent file-write]"},
        {"api": "sed", "args": "match($2,\"^{home}\")",
         "rationale": "The task writes files; edits stay inside '{raw_home}'. [intent file-write]"},
        {"api": "mkdir", "args": "match($1,\"^{home}\")",
         "rationale": "The task may create directories inside '{raw_home}'. [intent file-write]"}
      ]
    },
    {
      "name": "file-read",
      "keywords": ["file", "logs", "log", "documents", "scan", "check", "look at", "parse",
                   "data", "disk", "my home directory", "attachments"],
      "rules": [
        {"api": "ls", "args": "true",
         "rationale": "The task reads the filesystem; listing directories is harmless. [intent file-read]"},
        {"api": "tree", "args": "true",
         "rationale": "The task reads the filesystem; walking names is harmless. [intent file-read]"},
        {"api": "cat", "args": "match($1,\"^{home}\")",
         "rationale": "The task reads files inside '{raw_home}'. [intent file-read]"},
        {"api": "find", "args": "match($1,\"^{home}\")",
         "rationale": "The task searches inside '{raw_home}'. [intent file-read]"},
        {"api": "grep", "args": "match($2,\"^{home}\")",
         "rationale": "The task searches file contents inside '{raw_home}'. [intent file-read]"}
      ]
    }
  ],
  "guards": [
    {"api": "delete_email",
     "granted_by": ["email-delete"],
     "triggered_by": ["email-respond-urgent", "email-organize", "email-delete", "email-send",
                      "email-read"],
     "rationale": "We are not deleting any emails in this task."},
    {"api": "send_email",
     "granted_by": ["email-send", "email-respond-urgent"],
     "triggered_by": ["email-respond-urgent", "email-organize", "email-delete", "email-send",
                      "email-read"],
     "rationale": "We are not sending any emails in this task."},
    {"api": "rm",
     "granted_by": ["file-delete"],
     "triggered_by": ["admin-audit", "system-logs", "backup", "organize-files", "file-delete",
                      "file-write", "file-read"],
     "rationale": "We are not deleting any files in this task."},
    {"api": "rmdir",
     "granted_by": ["file-delete"],
     "triggered_by": ["admin-audit", "system-logs", "backup", "organize-files", "file-delete",
                      "file-write", "file-read"],
     "rationale": "We are not removing any directories in this task."}
  ]
})RT";

std::string expr_string_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '\\' || c == '"') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return char(std::tolower(c)); });
    return out;
}

// Replaces every {key} from the map; false when the text references a
// placeholder that is missing or empty (the rule is then skipped, which
// keeps the failure mode on the deny side).
bool substitute(const std::string& tmpl,
                const std::map<std::string, std::string>& values, std::string& out) {
    out.clear();
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            std::size_t end = tmpl.find('}', i);
            if (end == std::string::npos) return false;
            std::string key = tmpl.substr(i + 1, end - i - 1);
            auto it = values.find(key);
            if (it == values.end() || it->second.empty()) return false;
            out += it->second;
            i = end + 1;
        } else {
            out.push_back(tmpl[i]);
            ++i;
        }
    }
    return true;
}

std::vector<std::string> split_list(const std::string& joined) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start < joined.size()) {
        std::size_t end = joined.find(", ", start);
        if (end == std::string::npos) {
            out.push_back(joined.substr(start));
            break;
        }
        out.push_back(joined.substr(start, end - start));
        start = end + 2;
    }
    return out;
}

std::map<std::string, std::string> substitution_values(const TrustedContextBundle& bundle) {
    std::map<std::string, std::string> v;
    std::string user = bundle.find_value("current_user");
    if (!user.empty()) {
        v["user"] = expr_string_escape(escape_literal(user));
        v["raw_user"] = user;
        std::string home = "/home/" + user;
        v["home"] = expr_string_escape(escape_literal(home));
        v["raw_home"] = home;
    }

    std::set<std::string> domains;
    std::string self_address;
    for (const auto& addr : split_list(bundle.joined_values("email_addresses"))) {
        auto at = addr.find('@');
        if (at == std::string::npos || at + 1 >= addr.size()) continue;
        domains.insert(addr.substr(at));  // includes the '@'
        if (!user.empty() && self_address.empty() && addr.compare(0, at, user) == 0)
            self_address = addr;
    }
    if (!domains.empty()) {
        std::string pattern;
        if (domains.size() == 1) {
            pattern = escape_literal(*domains.begin());
        } else {
            pattern = "(";
            bool first = true;
            for (const auto& d : domains) {
                if (!first) pattern += "|";
                pattern += escape_literal(d);
                first = false;
            }
            pattern += ")";
        }
        v["at_domain"] = expr_string_escape(pattern);
        std::string raw;
        for (const auto& d : domains) {
            if (!raw.empty()) raw += ", ";
            raw += d.substr(1);
        }
        v["raw_domains"] = raw;
    }
    if (!self_address.empty()) {
        v["user_address"] = expr_string_escape(escape_literal(self_address));
        v["raw_user_address"] = self_address;
    }
    return v;
}

}  // namespace

std::string escape_literal(std::string_view s) {
    static constexpr std::string_view meta = "\\.[](){}*+?|^$";
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (meta.find(c) != std::string_view::npos) out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

std::string_view default_rule_table_json() { return kDefaultRuleTable; }

Result<RuleTable, std::string> parse_rule_table(std::string_view json_text) {
    json root = json::parse(json_text, nullptr, false);
    if (root.is_discarded()) return std::string("rule table is not valid JSON");
    if (!root.is_object() || !root.contains("intents") || !root["intents"].is_array())
        return std::string("rule table needs an 'intents' array");

    RuleTable table;
    std::set<std::string> names;
    for (const auto& ij : root["intents"]) {
        RuleTable::Intent intent;
        if (!ij.is_object() || !ij.contains("name") || !ij["name"].is_string())
            return std::string("intent without a name");
        intent.name = ij["name"].get<std::string>();
        if (!names.insert(intent.name).second)
            return std::string("duplicate intent '" + intent.name + "'");
        if (!ij.contains("keywords") || !ij["keywords"].is_array())
            return std::string("intent '" + intent.name + "' needs keywords");
        for (const auto& k : ij["keywords"]) {
            if (!k.is_string()) return std::string("non-string keyword in '" + intent.name + "'");
            intent.keywords.push_back(lowercase(k.get<std::string>()));
        }
        if (!ij.contains("rules") || !ij["rules"].is_array())
            return std::string("intent '" + intent.name + "' needs rules");
        for (const auto& rj : ij["rules"]) {
            if (!rj.is_object() || !rj.contains("api") || !rj.contains("args") ||
                !rj.contains("rationale"))
                return std::string("rule in '" + intent.name + "' needs api/args/rationale");
            intent.rules.push_back({rj["api"].get<std::string>(), rj["args"].get<std::string>(),
                                    rj["rationale"].get<std::string>()});
        }
        table.intents.push_back(std::move(intent));
    }
    if (root.contains("guards")) {
        if (!root["guards"].is_array()) return std::string("'guards' must be an array");
        for (const auto& gj : root["guards"]) {
            if (!gj.is_object() || !gj.contains("api") || !gj.contains("granted_by") ||
                !gj.contains("triggered_by") || !gj.contains("rationale"))
                return std::string("guard needs api/granted_by/triggered_by/rationale");
            RuleTable::Guard guard;
            guard.api = gj["api"].get<std::string>();
            for (const auto& g : gj["granted_by"]) guard.granted_by.push_back(g.get<std::string>());
            for (const auto& t : gj["triggered_by"])
                guard.triggered_by.push_back(t.get<std::string>());
            guard.rationale = gj["rationale"].get<std::string>();
            if (guard.rationale.empty()) return std::string("guard with empty rationale");
            table.guards.push_back(std::move(guard));
        }
    }
    return table;
}

const RuleTable& default_rule_table() {
    static const RuleTable table = [] {
        auto parsed = parse_rule_table(kDefaultRuleTable);
        return parsed.take();
    }();
    return table;
}

Policy write_policy_template(const std::string& task, const TrustedContextBundle& bundle,
                             const std::vector<ToolApiDoc>& docs) {
    return write_policy_template(task, bundle, docs, default_rule_table());
}

Policy write_policy_template(const std::string& task, const TrustedContextBundle& bundle,
                             const std::vector<ToolApiDoc>& docs, const RuleTable& table) {
    Policy policy;
    policy.task = task;

    auto registry = ApiRegistry::build(docs);
    if (!registry.ok()) return policy;  // unusable docs: everything denied

    const std::string task_lc = lowercase(task);
    std::set<std::string> fired;
    for (const auto& intent : table.intents) {
        for (const auto& kw : intent.keywords) {
            if (!kw.empty() && task_lc.find(kw) != std::string::npos) {
                fired.insert(intent.name);
                break;
            }
        }
    }

    const auto values = substitution_values(bundle);
    for (const auto& intent : table.intents) {
        if (fired.count(intent.name) == 0) continue;
        for (const auto& rule : intent.rules) {
            if (policy.constraints.count(rule.api) != 0) continue;  // earlier intent wins
            if (!registry.value().find(rule.api)) continue;
            std::string args_text, rationale;
            if (!substitute(rule.args_template, values, args_text)) continue;
            if (!substitute(rule.rationale_template, values, rationale)) continue;
            auto expr = parse_expr(args_text);
            if (!expr || rationale.empty()) continue;  // malformed table entry: stay denied
            ApiConstraint c;
            c.can_execute = true;
            c.args = expr.take();
            c.rationale = std::move(rationale);
            policy.constraints.emplace(rule.api, std::move(c));
        }
    }

    for (const auto& guard : table.guards) {
        if (policy.constraints.count(guard.api) != 0) continue;
        if (!registry.value().find(guard.api)) continue;
        bool triggered = std::any_of(guard.triggered_by.begin(), guard.triggered_by.end(),
                                     [&](const std::string& n) { return fired.count(n) != 0; });
        bool granted = std::any_of(guard.granted_by.begin(), guard.granted_by.end(),
                                   [&](const std::string& n) { return fired.count(n) != 0; });
        if (!triggered || granted) continue;
        ApiConstraint c;
        c.can_execute = false;
        c.rationale = guard.rationale;
        policy.constraints.emplace(guard.api, std::move(c));
    }
    return policy;
}

std::string render_tool_docs(const std::vector<ToolApiDoc>& docs) {
    std::string out;
    for (const auto& doc : docs) {
        out += "Tool: " + doc.tool_name + "\n";
        for (const auto& call : doc.calls) {
            out += "  " + call.name + "(";
            for (std::size_t i = 0; i < call.params.size(); ++i) {
                if (i) out += ", ";
                out += call.params[i].name;
                if (i >= call.required_count) out += "?";
            }
            out += ")";
            out += call.mutating ? " [mutating]" : " [read-only]";
            out += " - " + call.doc + "\n";
        }
    }
    return out;
}

std::string assemble_prompt(const std::string& task, const TrustedContextBundle& bundle,
                            const std::vector<ToolApiDoc>& docs,
                            const std::vector<GoldenExample>& goldens) {
    std::string out;
    out += "== Tool API documentation ==\n";
    out += render_tool_docs(docs);
    out += "\n== Example policies ==\n";
    for (const auto& g : goldens) {
        out += "Example task: " + g.task + "\n";
        out += "Example context: " + g.context_digest + "\n";
        out += "Example policy:\n" + serialize_policy(g.policy) + "\n";
    }
    out += "== Output format ==\n";
    out += "Write a security policy for the task below. Output exactly one JSON object of the\n"
           "form {\"task\": ..., \"default\": \"deny\", \"constraints\": {...}} and nothing else.\n"
           "Each constraint maps an API name to {\"can_execute\": bool, \"args\": expr,\n"
           "\"rationale\": text}; omit \"args\" when can_execute is false. The args expression\n"
           "combines match($N,\"pattern\"), fullmatch($N,\"pattern\") and exists($N) with\n"
           "'and', 'or', 'not'. Every API call not named in constraints is denied.\n";
    out += "\n== Task ==\n" + task + "\n";
    out += "\n== Trusted context ==\n";
    out += bundle_to_text(bundle);
    return out;
}

std::vector<Violation> validate_policy(const Policy& policy,
                                       const std::vector<ToolApiDoc>& docs) {
    std::vector<Violation> violations;
    auto registry = ApiRegistry::build(docs);
    if (!registry.ok()) {
        violations.push_back({Violation::Kind::InvalidDocs, "", registry.error()});
        return violations;
    }
    for (const auto& [api, c] : policy.constraints) {
        const ApiCallSpec* spec = registry.value().find(api);
        if (!spec) {
            violations.push_back(
                {Violation::Kind::UnknownApi, api, "api not present in the tool docs"});
            continue;
        }
        if (c.rationale.empty())
            violations.push_back({Violation::Kind::MissingRationale, api, "empty rationale"});
        if (c.args) {
            int max_ref = c.args->max_arg_index();
            if (max_ref > int(spec->params.size()))
                violations.push_back({Violation::Kind::ArgRefOutOfRange, api,
                                      "constraint references $" + std::to_string(max_ref) +
                                          " but " + api + " declares " +
                                          std::to_string(spec->params.size()) + " parameter(s)"});
        }
    }
    return violations;
}

namespace {

std::string violations_text(const std::vector<Violation>& vs) {
    std::string out;
    for (const auto& v : vs) {
        if (!out.empty()) out += "; ";
        out += (v.api.empty() ? std::string() : v.api + ": ") + v.detail;
    }
    return out;
}

// Candidate policy texts inside a model response: the whole thing, any
// fenced block, then the outermost brace span.
std::vector<std::string> response_candidates(std::string_view response) {
    std::vector<std::string> out;
    out.emplace_back(response);
    std::size_t pos = 0;
    while (true) {
        std::size_t open = response.find("```", pos);
        if (open == std::string_view::npos) break;
        std::size_t body = response.find('\n', open);
        if (body == std::string_view::npos) break;
        std::size_t close = response.find("```", body);
        if (close == std::string_view::npos) break;
        out.emplace_back(response.substr(body + 1, close - body - 1));
        pos = close + 3;
    }
    std::size_t first = response.find('{');
    std::size_t last = response.rfind('}');
    if (first != std::string_view::npos && last != std::string_view::npos && last > first)
        out.emplace_back(response.substr(first, last - first + 1));
    return out;
}

}  // namespace

Result<Policy, ModelWriterError> parse_model_response(std::string_view response,
                                                      const std::vector<ToolApiDoc>& docs) {
    std::string last_error = "no policy object found in the response";
    for (const auto& candidate : response_candidates(response)) {
        auto parsed = parse_policy(candidate);
        if (!parsed.ok()) {
            last_error = parsed.error().message;
            continue;
        }
        auto violations = validate_policy(parsed.value(), docs);
        if (!violations.empty())
            return ModelWriterError{ModelWriterError::Kind::ValidationFailed,
                                    violations_text(violations), std::move(violations)};
        return parsed.take();
    }
    return ModelWriterError{ModelWriterError::Kind::Unparseable, last_error, {}};
}

namespace {

bool split_url(const std::string& url, std::string& base, std::string& path) {
    std::size_t scheme = url.find("://");
    if (scheme == std::string::npos) return false;
    std::size_t slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) {
        base = url;
        path = "/";
    } else {
        base = url.substr(0, slash);
        path = url.substr(slash);
    }
    return true;
}

}  // namespace

Result<Policy, ModelWriterError> write_policy_model(const std::string& task,
                                                    const TrustedContextBundle& bundle,
                                                    const std::vector<ToolApiDoc>& docs,
                                                    const WriterConfig& config) {
    using Kind = ModelWriterError::Kind;
    std::string base, path;
    if (!split_url(config.endpoint, base, path))
        return ModelWriterError{Kind::Transport, "bad endpoint URL: " + config.endpoint, {}};

    const std::string prompt = assemble_prompt(task, bundle, docs, config.golden_set);
    const char* key = std::getenv("CONSECA_MODEL_KEY");

    std::string attempt_prompt = prompt;
    ModelWriterError last{Kind::Transport, "no attempt made", {}};
    for (int attempt = 0; attempt < 2; ++attempt) {
        json body = {{"model", config.model_name},
                     {"temperature", 0},
                     {"messages", json::array({{{"role", "user"}, {"content", attempt_prompt}}})}};
        httplib::Client client(base);
        client.set_connection_timeout(10);
        client.set_read_timeout(60);
        httplib::Headers headers;
        if (key && *key) headers.emplace("Authorization", std::string("Bearer ") + key);
        std::string body_text = body.dump();
        if (config.debug)
            std::fprintf(stderr, "[conseca debug] POST %s%s (authorization header %s)\n%s\n",
                         base.c_str(), path.c_str(), key && *key ? "set, redacted" : "absent",
                         body_text.c_str());
        auto res = client.Post(path, headers, body_text, "application/json");
        if (!res) {
            last = {Kind::Transport, "request failed: " + httplib::to_string(res.error()), {}};
            continue;
        }
        if (config.debug)
            std::fprintf(stderr, "[conseca debug] response %d\n%s\n", res->status,
                         res->body.c_str());
        if (res->status != 200) {
            last = {Kind::Transport, "endpoint returned status " + std::to_string(res->status), {}};
            continue;
        }
        json parsed = json::parse(res->body, nullptr, false);
        std::string content;
        if (!parsed.is_discarded() && parsed.contains("choices") && parsed["choices"].is_array() &&
            !parsed["choices"].empty()) {
            const auto& choice = parsed["choices"][0];
            if (choice.contains("message") && choice["message"].contains("content") &&
                choice["message"]["content"].is_string())
                content = choice["message"]["content"].get<std::string>();
        }
        if (content.empty()) {
            last = {Kind::Unparseable, "response carried no message content", {}};
        } else {
            auto policy = parse_model_response(content, docs);
            if (policy.ok()) return policy.take();
            last = policy.error();
        }
        attempt_prompt = prompt + "\n\nYour previous response could not be used: " + last.message +
                         "\nRespond with exactly one policy JSON object and nothing else.\n";
    }
    return last;
}

std::vector<GoldenExample> default_golden_examples() {
    auto expr = [](const char* text) { return parse_expr(text).take(); };
    std::vector<GoldenExample> goldens;

    {
        GoldenExample g;
        g.task = "Back up my documents and email me the archive";
        g.context_digest = "current_user=sam; addresses=*@work.com";
        g.policy.task = g.task;
        g.policy.constraints["ls"] = {true, expr("true"),
                                      "Listing directories is needed to pick backup targets."};
        g.policy.constraints["zip"] = {true, expr("match($1,\"^/home/sam\") and match($2,\"^/home/sam\")"),
                                       "The archive and its members stay in sam's home."};
        g.policy.constraints["send_email"] =
            {true, expr("match($1,\"sam\") and match($2,\"^sam@work\\\\.com$\")"),
             "The archive goes only to sam's own work address."};
        g.policy.constraints["delete_email"] =
            {false, nullptr, "We are not deleting any emails in this task."};
        goldens.push_back(std::move(g));
    }
    {
        GoldenExample g;
        g.task = "Summarize my inbox into a file";
        g.context_digest = "current_user=sam; addresses=*@work.com";
        g.policy.task = g.task;
        g.policy.constraints["list_emails"] = {true, expr("match($1,\"sam\")"),
                                               "Summaries require listing sam's mailbox."};
        g.policy.constraints["read_email"] = {true, expr("match($1,\"sam\")"),
                                              "Summaries require reading sam's emails."};
        g.policy.constraints["touch"] = {true, expr("match($1,\"^/home/sam\")"),
                                         "The summary file is created in sam's home."};
        g.policy.constraints["sed"] = {true, expr("match($2,\"^/home/sam\")"),
                                       "The summary file is edited in sam's home."};
        g.policy.constraints["send_email"] =
            {false, nullptr, "We are not sending any emails in this task."};
        goldens.push_back(std::move(g));
    }
    {
        GoldenExample g;
        g.task = "Sort the files in my documents folder into subfolders";
        g.context_digest = "current_user=sam; addresses=*@work.com";
        g.policy.task = g.task;
        g.policy.constraints["ls"] = {true, expr("true"),
                                      "Sorting requires listing the documents folder."};
        g.policy.constraints["mkdir"] = {true, expr("match($1,\"^/home/sam\")"),
                                         "Category folders are created in sam's home."};
        g.policy.constraints["mv"] =
            {true, expr("match($1,\"^/home/sam\") and match($2,\"^/home/sam\")"),
             "Files move only within sam's home."};
        goldens.push_back(std::move(g));
    }
    return goldens;
}

}  // namespace conseca
