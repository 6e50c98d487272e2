#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eqa {

/// Broad classification of failures. The CLI maps these onto exit codes and
/// prefixes messages with the category name.
enum class ErrorKind {
    parse,
    duplicate_id,
    empty_node,
    span,
    annotation,
    unknown_id,
    invalid_argument,
    dimension,
    config,
    version,
    corrupt,
    io,
};

[[nodiscard]] std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind)
    {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message)
{
    throw Error(kind, message);
}

}  // namespace eqa
