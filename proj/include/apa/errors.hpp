#pragma once

#include <stdexcept>
#include <string>

namespace apa {

// Malformed or inconsistent file contents (bad magic, truncated payload, ...).
class FormatError : public std::runtime_error {
public:
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem-level failures (cannot open, short write, ...).
class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace apa
