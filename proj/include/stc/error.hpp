#pragma once

#include <stdexcept>
#include <string>

namespace stc {

// All library failures carry a machine-parsable category; the CLI prints
// them as "error: <category>: <message>" and exits nonzero.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& message)
        : std::runtime_error(message), category_(std::move(category)) {}

    const std::string& category() const noexcept { return category_; }

private:
    std::string category_;
};

[[noreturn]] inline void fail(const char* category, const std::string& message) {
    throw Error(category, message);
}

}  // namespace stc
