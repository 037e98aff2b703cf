#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "conseca/context.hpp"
#include "conseca/enforcer.hpp"
#include "conseca/harness.hpp"
#include "conseca/policy.hpp"
#include "conseca/simworld.hpp"
#include "conseca/writers.hpp"

namespace fs = std::filesystem;
using namespace conseca;

namespace {

#ifndef CONSECA_SOURCE_DIR
#define CONSECA_SOURCE_DIR "."
#endif

std::string slurp(const std::string& path, bool& ok) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        ok = false;
        return {};
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    ok = true;
    return buf.str();
}

int die(const std::string& message) {
    std::cerr << "conseca: " << message << "\n";
    return 2;
}

struct WriterOptions {
    std::string writer = "template";
    std::string writer_config_path;
    std::string rule_table_path;
    std::string goldens_note;  // unused placeholder for CLI symmetry
    bool debug = false;
};

bool build_writer_config(const WriterOptions& opts, WriterConfig& config, std::string& error) {
    config.debug = opts.debug;
    if (opts.writer == "template") {
        config.kind = WriterKind::template_writer;
    } else if (opts.writer == "model") {
        config.kind = WriterKind::external_model;
        if (opts.writer_config_path.empty()) {
            error = "--writer model requires --writer-config";
            return false;
        }
        bool ok = false;
        std::string text = slurp(opts.writer_config_path, ok);
        if (!ok) {
            error = "cannot read writer config: " + opts.writer_config_path;
            return false;
        }
        auto j = nlohmann::json::parse(text, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("endpoint") ||
            !j.contains("model_name")) {
            error = "writer config needs JSON with 'endpoint' and 'model_name'";
            return false;
        }
        config.endpoint = j["endpoint"].get<std::string>();
        config.model_name = j["model_name"].get<std::string>();
        config.golden_set = default_golden_examples();
    } else {
        error = "unknown writer '" + opts.writer + "' (use template or model)";
        return false;
    }
    if (!opts.rule_table_path.empty()) {
        bool ok = false;
        std::string text = slurp(opts.rule_table_path, ok);
        if (!ok) {
            error = "cannot read rule table: " + opts.rule_table_path;
            return false;
        }
        auto table = parse_rule_table(text);
        if (!table.ok()) {
            error = table.error();
            return false;
        }
        config.rule_table = table.take();
    }
    return true;
}

Result<Scenario, std::string> resolve_scenario(const std::string& ref,
                                               const std::string& scenarios_dir) {
    if (fs::exists(ref)) return load_scenario_file(ref);
    // otherwise interpret as a scenario id inside the scenarios directory
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(scenarios_dir, ec)) {
        if (entry.path().extension() != ".json") continue;
        auto loaded = load_scenario_file(entry.path().string());
        if (loaded.ok() && loaded.value().id == ref) return loaded;
    }
    return std::string("no scenario file or id '" + ref + "' (searched " + scenarios_dir + ")");
}

std::vector<std::string> scenario_files(const std::string& scenarios_dir, std::string& error) {
    std::vector<std::string> files;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(scenarios_dir, ec)) {
        if (entry.path().extension() == ".json") files.push_back(entry.path().string());
    }
    if (ec) error = "cannot list " + scenarios_dir + ": " + ec.message();
    std::sort(files.begin(), files.end());
    return files;
}

Result<World, std::string> world_from_ref(const std::string& ref) {
    if (ref == "default") return init_world(default_setup());
    auto scenario = load_scenario_file(ref);
    if (!scenario.ok()) return scenario.error();
    return init_world(scenario.value().setup);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"contextual security policies for tool-using agents"};
    app.require_subcommand(1);
    WriterOptions writer_opts;
    app.add_flag("--debug", writer_opts.debug, "log model writer requests and responses");

    std::string default_scenarios_dir = std::string(CONSECA_SOURCE_DIR) + "/scenarios";

    // gen
    auto* gen = app.add_subcommand("gen", "generate a policy for a task");
    std::string gen_task, gen_world = "default", gen_user = "alice";
    std::string gen_clock = default_setup().clock, gen_out;
    gen->add_option("--task", gen_task, "task text")->required();
    gen->add_option("--world", gen_world, "'default' or a scenario file providing the setup");
    gen->add_option("--user", gen_user, "task user");
    gen->add_option("--clock", gen_clock, "ISO-8601 UTC timestamp");
    gen->add_option("--writer", writer_opts.writer, "template|model");
    gen->add_option("--writer-config", writer_opts.writer_config_path,
                    "JSON file with endpoint and model_name");
    gen->add_option("--rule-table", writer_opts.rule_table_path, "rule table JSON override");
    gen->add_option("--out", gen_out, "output file (default stdout)");

    // check
    auto* check = app.add_subcommand("check", "check one command against a policy file");
    std::string check_policy, check_cmd;
    check->add_option("--policy", check_policy, "policy file")->required();
    check->add_option("--cmd", check_cmd, "proposed command text")->required();

    // run
    auto* run = app.add_subcommand("run", "run scenarios under a policy mode");
    std::string run_scenario_ref, run_mode = "contextual", run_out_dir, run_audit_path;
    std::string run_scenarios_dir = default_scenarios_dir;
    int run_trials = 0;
    bool run_confirm = false;
    run->add_option("--scenario", run_scenario_ref, "scenario file, scenario id, or 'all'")
        ->required();
    run->add_option("--mode", run_mode, "none|static_permissive|static_restrictive|contextual");
    run->add_option("--writer", writer_opts.writer, "template|model");
    run->add_option("--writer-config", writer_opts.writer_config_path,
                    "JSON file with endpoint and model_name");
    run->add_option("--rule-table", writer_opts.rule_table_path, "rule table JSON override");
    run->add_option("--trials", run_trials, "trials per scenario (default: 5 for none/contextual)");
    run->add_flag("--confirm-policy", run_confirm, "print the policy and ask before running");
    run->add_option("--audit", run_audit_path, "append audit records to this JSONL file");
    run->add_option("--out", run_out_dir, "directory for run result JSON files");
    run->add_option("--scenarios-dir", run_scenarios_dir, "where scenario ids are resolved");

    // report
    auto* report = app.add_subcommand("report", "summarize run results as a table");
    std::string report_dir;
    report->add_option("--in", report_dir, "directory of run result JSON files")->required();

    CLI11_PARSE(app, argc, argv);

    if (gen->parsed()) {
        auto world = world_from_ref(gen_world);
        if (!world.ok()) return die(world.error());
        auto items = collect_trusted_context(world.value(), gen_user, gen_clock);
        if (!items.ok()) return die(items.error().message);
        auto bundle = guard_bundle(items.take(), gen_user, gen_clock);
        if (!bundle.ok()) return die(bundle.error().message);
        WriterConfig config;
        std::string error;
        if (!build_writer_config(writer_opts, config, error)) return die(error);

        Policy policy;
        if (config.kind == WriterKind::template_writer) {
            const RuleTable& table = config.rule_table ? *config.rule_table : default_rule_table();
            policy = write_policy_template(gen_task, bundle.value(), default_tool_docs(), table);
        } else {
            auto written =
                write_policy_model(gen_task, bundle.value(), default_tool_docs(), config);
            if (!written.ok()) return die("model writer failed: " + written.error().message);
            policy = written.take();
        }
        std::string text = serialize_policy(policy);
        if (gen_out.empty()) {
            std::cout << text;
        } else {
            std::ofstream out(gen_out, std::ios::binary);
            if (!out) return die("cannot write " + gen_out);
            out << text;
        }
        return 0;
    }

    if (check->parsed()) {
        bool ok = false;
        std::string text = slurp(check_policy, ok);
        if (!ok) return die("cannot read policy file: " + check_policy);
        auto policy = parse_policy(text);
        if (!policy.ok()) return die("bad policy file: " + policy.error().message);
        auto registry = ApiRegistry::build(default_tool_docs());
        if (!registry.ok()) return die(registry.error());
        auto cmd = parse_command(check_cmd);
        if (!cmd.ok()) {
            std::cout << "deny: command rejected: " << cmd.error().message << "\n";
            return 1;
        }
        Decision d = is_allowed(cmd.value(), policy.value(), registry.value());
        std::cout << (d.allowed ? "allow: " : "deny: ") << d.rationale << "\n";
        return d.allowed ? 0 : 1;
    }

    if (run->parsed()) {
        auto mode = policy_mode_from(run_mode);
        if (!mode) return die("unknown mode '" + run_mode + "'");
        WriterConfig config;
        std::string error;
        if (!build_writer_config(writer_opts, config, error)) return die(error);

        std::vector<Scenario> scenarios;
        if (run_scenario_ref == "all") {
            auto files = scenario_files(run_scenarios_dir, error);
            if (!error.empty()) return die(error);
            if (files.empty()) return die("no scenario files in " + run_scenarios_dir);
            for (const auto& f : files) {
                auto s = load_scenario_file(f);
                if (!s.ok()) return die(s.error());
                scenarios.push_back(s.take());
            }
        } else {
            auto s = resolve_scenario(run_scenario_ref, run_scenarios_dir);
            if (!s.ok()) return die(s.error());
            scenarios.push_back(s.take());
        }

        int trials = run_trials;
        if (trials <= 0)
            trials = (*mode == PolicyMode::none || *mode == PolicyMode::contextual) ? 5 : 1;

        if (run_confirm) {
            // Show the policy for the first scenario before touching anything.
            const Scenario& first = scenarios.front();
            auto world = init_world(first.setup);
            if (!world.ok()) return die(world.error());
            std::string policy_text = "(no policy in mode none)\n";
            if (*mode != PolicyMode::none) {
                if (*mode == PolicyMode::contextual) {
                    auto items =
                        collect_trusted_context(world.value(), first.setup.task_user,
                                                first.setup.clock);
                    if (!items.ok()) return die(items.error().message);
                    auto bundle =
                        guard_bundle(items.take(), first.setup.task_user, first.setup.clock);
                    if (!bundle.ok()) return die(bundle.error().message);
                    const RuleTable& table =
                        config.rule_table ? *config.rule_table : default_rule_table();
                    policy_text = serialize_policy(write_policy_template(
                        first.task, bundle.value(), default_tool_docs(), table));
                } else {
                    auto p = static_policy(*mode, default_tool_docs());
                    if (!p.ok()) return die(p.error().message);
                    policy_text = serialize_policy(p.value());
                }
            }
            std::cout << policy_text << "proceed? [y/N] " << std::flush;
            std::string answer;
            std::getline(std::cin, answer);
            if (answer != "y" && answer != "Y") {
                std::cout << "declined\n";
                return 1;
            }
        }

        std::ofstream audit_out;
        if (!run_audit_path.empty()) {
            audit_out.open(run_audit_path, std::ios::binary | std::ios::app);
            if (!audit_out) return die("cannot open audit file " + run_audit_path);
        }
        if (!run_out_dir.empty()) {
            std::error_code ec;
            fs::create_directories(run_out_dir, ec);
            if (ec) return die("cannot create " + run_out_dir);
        }

        std::vector<RunResult> results;
        for (const auto& scenario : scenarios) {
            for (int t = 0; t < trials; ++t) {
                auto result = run_scenario(scenario, *mode, config);
                if (!result.ok()) return die(result.error().message);
                const RunResult& r = result.value();
                std::cout << r.scenario_id << " [" << to_string(r.mode) << " trial " << (t + 1)
                          << "] " << (r.completed ? "completed" : "could_not_complete")
                          << " actions=" << r.actions_executed << " denials=" << r.denials
                          << "\n";
                if (audit_out)
                    for (const auto& rec : r.audit) audit_out << audit_to_jsonl_line(rec);
                if (!run_out_dir.empty()) {
                    std::string name = r.scenario_id + "_" + std::string(to_string(r.mode)) +
                                       "_t" + std::to_string(t + 1) + ".json";
                    std::ofstream out(fs::path(run_out_dir) / name, std::ios::binary);
                    if (!out) return die("cannot write run result " + name);
                    out << run_result_to_json(r);
                }
                results.push_back(result.take());
            }
        }
        if (scenarios.size() > 1) std::cout << "\n" << render_report(results);
        return 0;
    }

    if (report->parsed()) {
        std::vector<RunResult> results;
        std::error_code ec;
        std::vector<std::string> files;
        for (const auto& entry : fs::directory_iterator(report_dir, ec))
            if (entry.path().extension() == ".json") files.push_back(entry.path().string());
        if (ec) return die("cannot list " + report_dir + ": " + ec.message());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            bool ok = false;
            std::string text = slurp(f, ok);
            if (!ok) return die("cannot read " + f);
            auto r = run_result_from_json(text);
            if (!r.ok()) return die(f + ": " + r.error());
            results.push_back(r.take());
        }
        if (results.empty()) return die("no run results in " + report_dir);
        std::cout << render_report(results);
        return 0;
    }
    return 0;
}
