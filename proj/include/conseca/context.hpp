#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "conseca/result.hpp"

namespace conseca {

struct World;

enum class Trust { trusted, untrusted };

/// One taint-labeled context value. The label is assigned at creation
/// and never changes afterwards.
struct ContextItem {
    std::string key;
    std::string value;
    Trust trust = Trust::untrusted;
    std::string source;  // collector id
};

/// Values longer than this are split into continuation items by the
/// collectors and rejected by the guard: unbounded context values give
/// an attacker more room than any policy writer needs.
inline constexpr std::size_t kMaxContextValueLen = 256;

struct ContextError {
    enum class Kind { UnknownUser, UntrustedLeak, ValueTooLong };
    Kind kind = Kind::UnknownUser;
    std::string message;
    std::string item_key;
};

/// The only context object a policy writer can receive. Construction
/// goes through guard_bundle, which refuses any untrusted item — that
/// refusal is the security boundary between tool output and the writer.
class TrustedContextBundle {
public:
    const std::vector<ContextItem>& items() const { return items_; }
    const std::string& task_user() const { return task_user_; }
    const std::string& timestamp() const { return timestamp_; }

    /// Value of the item with exactly this key, or empty.
    std::string find_value(std::string_view key) const;

    /// Concatenated values of all items whose key is `key` or a
    /// continuation of it ("<key> #2", ...), joined with ", ".
    std::string joined_values(std::string_view key_prefix) const;

private:
    friend Result<TrustedContextBundle, ContextError> guard_bundle(
        std::vector<ContextItem> items, std::string_view user, std::string_view clock);

    std::vector<ContextItem> items_;
    std::string task_user_;
    std::string timestamp_;
};

/// Collects the trusted slice of a world: filesystem names (never file
/// contents), the user registry's email addresses, the categories in
/// use, the current user, and the clock's date and time. Email
/// subjects, bodies and attachment payloads are attacker-reachable and
/// are never emitted here.
Result<std::vector<ContextItem>, ContextError> collect_trusted_context(const World& world,
                                                                       std::string_view user,
                                                                       std::string_view clock);

/// Admits the items into a bundle iff every one is Trusted and within
/// the size cap; otherwise reports the offending item.
Result<TrustedContextBundle, ContextError> guard_bundle(std::vector<ContextItem> items,
                                                        std::string_view user,
                                                        std::string_view clock);

/// "key: value" lines sorted by key — the bit-stable form that goes
/// into writer prompts.
std::string bundle_to_text(const TrustedContextBundle& bundle);

}  // namespace conseca
