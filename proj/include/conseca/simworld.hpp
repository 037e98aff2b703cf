#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "conseca/command.hpp"
#include "conseca/context.hpp"
#include "conseca/policy.hpp"
#include "conseca/result.hpp"

namespace conseca {

struct Email {
    int id = 0;
    std::string from;  // full address
    std::string to;    // full address
    std::string subject;
    std::string body;
    std::optional<std::string> category;
    std::vector<std::pair<std::string, std::string>> attachments;  // (name, contents)
    bool read = false;
};

struct FsNode {
    enum class Type { dir, file };
    Type type = Type::file;
    std::string contents;  // files only
    std::string owner;
    std::string mode;  // three octal digits, stored, not enforced
};

/// Deterministic in-memory machine: a path-keyed filesystem, per-user
/// mailboxes mirrored as files under each home's Mail directory, and a
/// fixed clock. One writer at a time; scenario runs own their world.
struct World {
    std::vector<std::string> users;
    std::vector<std::string> admins;
    std::string mail_domain;  // e.g. "work.com"
    std::map<std::string, FsNode> fs;
    std::map<std::string, std::vector<Email>> mailboxes;
    std::string clock;

    bool has_user(std::string_view name) const;
    std::string address_of(std::string_view user) const;
};

/// Every tool output is attacker-reachable by construction, so the
/// taint label is unconditional.
struct ExecResult {
    std::string out;
    std::string err;
    int exit_code = 0;
    Trust taint = Trust::untrusted;
};

struct SeedFile {
    std::string path;
    std::string contents;
    std::string owner;
    std::string mode = "644";
};

struct SeedEmail {
    std::string to_user;
    Email email;  // id ignored; assigned at delivery
};

struct ScenarioSetup {
    std::string preset = "default";  // "default" or "empty"
    std::string task_user = "alice";
    std::string clock = "2025-03-04T09:00:00Z";
    // "empty" preset only; the default preset ships its own ten users.
    std::vector<std::string> users;
    std::vector<std::string> admins;
    std::vector<SeedFile> extra_files;
    std::vector<SeedEmail> extra_emails;
};

ScenarioSetup default_setup();

Result<World, std::string> init_world(const ScenarioSetup& setup);

/// Appends the email to the recipient's mailbox, assigns the next id,
/// and mirrors it under /home/<user>/Mail. Attachments materialize as
/// files named <id>_a<k> (id-derived, so attacker-chosen attachment
/// names never become filesystem names). Returns the id, or -1 for an
/// unknown recipient.
int deliver_email(World& world, const std::string& to_user, Email email);

/// Runs one allowed command against the world. Failures surface as a
/// nonzero exit code with stderr text, never as exceptions; an unknown
/// API exits 127.
ExecResult execute(World& world, const ToolCommand& cmd);

/// The three tools and their call table.
const std::vector<ToolApiDoc>& default_tool_docs();

/// Sorted path -> metadata listing plus mailbox digests, for test diffs
/// and replay-determinism checks.
std::string dump_world(const World& world);

}  // namespace conseca
