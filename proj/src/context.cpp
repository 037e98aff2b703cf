#include "conseca/context.hpp"

#include <algorithm>
#include <set>

#include "conseca/simworld.hpp"

namespace conseca {

namespace {

// Greedy pack of comma-joined parts into values within the size cap;
// continuations get " #2", " #3", ... key suffixes.
void emit_chunked(std::vector<ContextItem>& items, const std::string& key,
                  const std::vector<std::string>& parts, const std::string& source) {
    std::vector<std::string> values;
    std::string cur;
    for (const auto& raw : parts) {
        std::string part = raw;
        if (part.size() > kMaxContextValueLen) part = part.substr(0, kMaxContextValueLen - 3) + "...";
        std::size_t extra = cur.empty() ? part.size() : cur.size() + 2 + part.size();
        if (!cur.empty() && extra > kMaxContextValueLen) {
            values.push_back(cur);
            cur = part;
        } else {
            if (!cur.empty()) cur += ", ";
            cur += part;
        }
    }
    values.push_back(cur);  // may be empty: the key's presence is itself information
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::string k = i == 0 ? key : key + " #" + std::to_string(i + 1);
        items.push_back({k, values[i], Trust::trusted, source});
    }
}

}  // namespace

Result<std::vector<ContextItem>, ContextError> collect_trusted_context(const World& world,
                                                                       std::string_view user,
                                                                       std::string_view clock) {
    using Kind = ContextError::Kind;
    if (!world.has_user(user))
        return ContextError{Kind::UnknownUser, "unknown user '" + std::string(user) + "'",
                            "current_user"};

    std::vector<ContextItem> items;
    items.push_back({"current_user", std::string(user), Trust::trusted, "harness"});

    std::string clock_text(clock);
    std::string date = clock_text.size() >= 10 ? clock_text.substr(0, 10) : clock_text;
    std::string time = clock_text.size() >= 19 ? clock_text.substr(11, 8) : clock_text;
    items.push_back({"date", date, Trust::trusted, "clock"});
    items.push_back({"time", time, Trust::trusted, "clock"});

    // Registry addresses only: senders seen in mailboxes are
    // attacker-reachable and must not steer the policy writer.
    std::vector<std::string> addresses;
    for (const auto& u : world.users) addresses.push_back(world.address_of(u));
    std::sort(addresses.begin(), addresses.end());
    emit_chunked(items, "email_addresses", addresses, "mail");

    std::set<std::string> categories;
    for (const auto& [owner, box] : world.mailboxes) {
        (void)owner;
        for (const auto& e : box)
            if (e.category) categories.insert(*e.category);
    }
    emit_chunked(items, "email_categories",
                 std::vector<std::string>(categories.begin(), categories.end()), "mail");

    // Names only — file contents and email bodies never pass this point.
    for (const auto& [path, node] : world.fs) {
        if (node.type != FsNode::Type::dir) continue;
        std::vector<std::string> names;
        std::string prefix = path == "/" ? "/" : path + "/";
        for (auto it = world.fs.lower_bound(prefix); it != world.fs.end(); ++it) {
            const std::string& p = it->first;
            if (p.compare(0, prefix.size(), prefix) != 0) break;
            if (p.find('/', prefix.size()) != std::string::npos) continue;
            std::string name = p.substr(prefix.size());
            if (it->second.type == FsNode::Type::dir) name += "/";
            names.push_back(std::move(name));
        }
        emit_chunked(items, "fs_tree " + path, names, "fs");
    }
    return items;
}

Result<TrustedContextBundle, ContextError> guard_bundle(std::vector<ContextItem> items,
                                                        std::string_view user,
                                                        std::string_view clock) {
    using Kind = ContextError::Kind;
    for (const auto& item : items) {
        if (item.trust != Trust::trusted)
            return ContextError{Kind::UntrustedLeak,
                                "untrusted item '" + item.key + "' (from " + item.source +
                                    ") may not reach a policy writer",
                                item.key};
        if (item.value.size() > kMaxContextValueLen)
            return ContextError{Kind::ValueTooLong,
                                "item '" + item.key + "' exceeds the " +
                                    std::to_string(kMaxContextValueLen) + "-byte value cap",
                                item.key};
    }
    TrustedContextBundle bundle;
    bundle.items_ = std::move(items);
    bundle.task_user_ = std::string(user);
    bundle.timestamp_ = std::string(clock);
    return bundle;
}

std::string TrustedContextBundle::find_value(std::string_view key) const {
    for (const auto& item : items_)
        if (item.key == key) return item.value;
    return {};
}

std::string TrustedContextBundle::joined_values(std::string_view key_prefix) const {
    // Collect in key order so chunked values reassemble deterministically.
    std::vector<std::pair<std::string, std::string>> hits;
    for (const auto& item : items_) {
        if (item.key == key_prefix ||
            (item.key.size() > key_prefix.size() &&
             item.key.compare(0, key_prefix.size(), key_prefix) == 0 &&
             item.key.compare(key_prefix.size(), 2, " #") == 0))
            hits.emplace_back(item.key, item.value);
    }
    std::sort(hits.begin(), hits.end());
    std::string out;
    for (const auto& [k, v] : hits) {
        (void)k;
        if (v.empty()) continue;
        if (!out.empty()) out += ", ";
        out += v;
    }
    return out;
}

std::string bundle_to_text(const TrustedContextBundle& bundle) {
    std::vector<std::pair<std::string, std::string>> lines;
    lines.reserve(bundle.items().size());
    for (const auto& item : bundle.items()) lines.emplace_back(item.key, item.value);
    std::sort(lines.begin(), lines.end());
    std::string out;
    for (const auto& [k, v] : lines) out += k + ": " + v + "\n";
    return out;
}

}  // namespace conseca
