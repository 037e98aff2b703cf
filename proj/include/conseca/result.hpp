#pragma once

#include <cassert>
#include <utility>
#include <variant>

namespace conseca {

// Minimal value-or-error carrier. Parsers and validators in this library
// never throw; they hand back one of these instead.
template <typename T, typename E>
class Result {
public:
    Result(T value) : v_(std::in_place_index<0>, std::move(value)) {}
    Result(E error) : v_(std::in_place_index<1>, std::move(error)) {}

    bool ok() const { return v_.index() == 0; }
    explicit operator bool() const { return ok(); }

    const T& value() const {
        assert(ok());
        return std::get<0>(v_);
    }
    T& value() {
        assert(ok());
        return std::get<0>(v_);
    }
    T take() {
        assert(ok());
        return std::move(std::get<0>(v_));
    }
    const E& error() const {
        assert(!ok());
        return std::get<1>(v_);
    }

private:
    std::variant<T, E> v_;
};

}  // namespace conseca
