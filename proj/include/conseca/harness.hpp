#pragma once

#include <optional>
#include <string>
#include <vector>

#include "conseca/enforcer.hpp"
#include "conseca/policy.hpp"
#include "conseca/result.hpp"
#include "conseca/simworld.hpp"
#include "conseca/writers.hpp"

namespace conseca {

/// One scripted proposal: the command text, a chain of fallbacks to try
/// on denial, and what to do once the chain runs out.
struct TraceStep {
    std::string proposed;
    std::vector<std::string> fallbacks;
    enum class OnExhausted { abort, skip } on_exhausted = OnExhausted::abort;
    bool completes_task = false;
};

/// Normative marker: deny-expectations name commands that should never
/// run for this task (the "inappropriate actions" of the report), and
/// allow-expectations name commands a good policy must keep available.
struct Expectation {
    std::string pattern;  // dialect regex, searched over the raw command
    bool expect_allow = false;
};

struct Scenario {
    std::string id;
    std::string task;
    ScenarioSetup setup;
    std::vector<TraceStep> trace;
    std::vector<SeedEmail> injected_emails;
    std::vector<Expectation> expectations;
};

struct AuditRecord {
    int seq = 0;
    std::string time;
    std::string scenario_id;
    std::string mode;
    std::string raw_command;
    std::string api_name;  // empty when the command did not tokenize
    bool allowed = false;
    std::string rationale;
};

struct RunResult {
    std::string scenario_id;
    PolicyMode mode = PolicyMode::none;
    bool completed = false;
    int actions_executed = 0;
    int denials = 0;
    enum class Outcome { done, could_not_complete } outcome = Outcome::could_not_complete;
    std::vector<AuditRecord> audit;

    // enforcement-order reconstruction and reporting
    std::vector<int> executed_seqs;  // audit seq of every execute() call
    int exec_failures = 0;           // executed commands with nonzero exit
    int inappropriate_hits = 0;      // audit records matching a deny-expectation
    int inappropriate_denied = 0;
    bool has_expectations = false;   // security scenario, excluded from completion averages
    std::string policy_text;         // empty in mode none
};

struct HarnessError {
    enum class Kind { ScenarioError, WriterError };
    Kind kind = Kind::ScenarioError;
    std::string message;
};

struct RunOptions {
    int max_proposals = 100;            // "could not complete" beyond this
    int max_consecutive_denials = 10;   // resets on any allowed action
};

/// The scripted stand-in for an LLM planner: follows the trace,
/// consuming fallbacks when the previous proposal was denied.
class ScriptedPlanner {
public:
    explicit ScriptedPlanner(const std::vector<TraceStep>& steps) : steps_(steps) {}

    enum class Kind { command, done, give_up };
    struct Proposal {
        Kind kind = Kind::give_up;
        std::string command;
    };

    /// last_decision is the enforcer's verdict on this planner's
    /// previous proposal (nullopt on the first call).
    Proposal next_action(const std::optional<Decision>& last_decision);

private:
    const std::vector<TraceStep>& steps_;
    std::size_t step_ = 0;
    int fallback_ = -1;  // -1: main proposal pending/outstanding
    bool finished_ = false;
    Proposal current_or_advance();
};

/// Runs the full loop: build the mode's policy, then propose / check /
/// execute / feed back until the trace completes, aborts, or a limit
/// trips. Every proposal — parseable or not — lands in the audit.
Result<RunResult, HarnessError> run_scenario(const Scenario& scenario, PolicyMode mode,
                                             const WriterConfig& writer,
                                             const RunOptions& options = {});

/// Figure-style table: one row per mode with the average number of
/// completed tasks and whether every inappropriate action was denied.
std::string render_report(const std::vector<RunResult>& results);

// ---- file formats ----------------------------------------------------

std::string scenario_to_json(const Scenario& scenario);
Result<Scenario, std::string> scenario_from_json(std::string_view text);
Result<Scenario, std::string> load_scenario_file(const std::string& path);

std::string audit_to_jsonl_line(const AuditRecord& record);

std::string run_result_to_json(const RunResult& result);
Result<RunResult, std::string> run_result_from_json(std::string_view text);

}  // namespace conseca
