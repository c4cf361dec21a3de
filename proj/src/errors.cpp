#include "anchorcov/errors.hpp"

namespace anchorcov {

namespace {

std::string compose(const std::string& origin, const std::optional<std::size_t>& line,
                    const std::string& path, const std::string& rule) {
  std::string msg = origin;
  if (line) msg += ":" + std::to_string(*line);
  if (!path.empty()) msg += ": " + path;
  msg += ": " + rule;
  return msg;
}

}  // namespace

ParseError::ParseError(std::string origin, std::optional<std::size_t> line,
                       std::string path, std::string rule)
    : std::runtime_error(compose(origin, line, path, rule)),
      origin_(std::move(origin)),
      line_(line),
      path_(std::move(path)),
      rule_(std::move(rule)) {}

}  // namespace anchorcov
