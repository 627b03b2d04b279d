#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dte {

// Precondition violations on domain objects (infeasible cells, unknown ids,
// length mismatches).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Raised whenever an enumeration or search would exceed its caller-supplied
// budget. `size` is the offending count, or the count at the moment the
// budget tripped when the full size is unknown.
class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(const std::string& what, std::uint64_t size, std::uint64_t budget)
      : std::runtime_error(what + " (size " + std::to_string(size) + " exceeds budget " +
                           std::to_string(budget) + ")"),
        size_(size),
        budget_(budget) {}

  std::uint64_t size() const noexcept { return size_; }
  std::uint64_t budget() const noexcept { return budget_; }

 private:
  std::uint64_t size_;
  std::uint64_t budget_;
};

// A check was requested on a game that does not satisfy the check's
// structural preconditions.
class Inapplicable : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Scenario file diagnostics. `field` is a JSON-pointer-like path such as
// "tasks[3].arrival"; empty for syntax errors.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace dte
