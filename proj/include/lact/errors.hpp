#pragma once

#include <stdexcept>
#include <string>

namespace lact {

/// Invalid configuration, preset name, or parameter range. CLI exit code 2.
class config_error : public std::runtime_error {
  public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// Mismatched grid/geometry dimensions.
class shape_error : public std::runtime_error {
  public:
    explicit shape_error(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite values or solver breakdown. CLI exit code 3.
class numeric_error : public std::runtime_error {
  public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

/// File parse failure; carries a line number when known.
class parse_error : public config_error {
  public:
    parse_error(const std::string& what, int line)
        : config_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    int line() const { return line_; }

  private:
    int line_;
};

} // namespace lact
