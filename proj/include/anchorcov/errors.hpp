#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace anchorcov {

// Input rejected: malformed file, schema violation, or broken data invariant.
// The message always carries a location (line or field path) and the rule.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string origin, std::optional<std::size_t> line,
             std::string path, std::string rule);

  const std::string& origin() const { return origin_; }
  const std::optional<std::size_t>& line() const { return line_; }
  const std::string& path() const { return path_; }
  const std::string& rule() const { return rule_; }

 private:
  std::string origin_;
  std::optional<std::size_t> line_;
  std::string path_;
  std::string rule_;
};

// A self-check inside the tool failed. Distinct from bad input; the CLI
// maps this to exit code 2.
class InternalError : public std::logic_error {
 public:
  explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace anchorcov
