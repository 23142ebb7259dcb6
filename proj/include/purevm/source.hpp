#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace purevm {

// Position within a source buffer, 1-based. col counts code units.
struct Pos {
    int line = 0;
    int col = 0;
    bool operator==(const Pos&) const = default;
};

struct Span {
    Pos begin;
    Pos end;
    bool operator==(const Span&) const = default;
};

inline std::string to_string(Pos p) {
    return std::to_string(p.line) + ":" + std::to_string(p.col);
}

// Base for every diagnostic thrown by the toolchain. `where` is always set
// by the thrower; callers rely on it for error reporting.
class Error : public std::runtime_error {
  public:
    Error(std::string kind, Pos where, const std::string& msg)
        : std::runtime_error(to_string(where) + ": " + kind + ": " + msg),
          kind_(std::move(kind)),
          where_(where) {}

    const std::string& kind() const { return kind_; }
    Pos where() const { return where_; }

  private:
    std::string kind_;
    Pos where_;
};

class SyntaxError : public Error {
  public:
    SyntaxError(Pos where, const std::string& msg) : Error("syntax error", where, msg) {}
};

class TypeError : public Error {
  public:
    TypeError(Pos where, const std::string& msg) : Error("type error", where, msg) {}
};

class ConfigError : public Error {
  public:
    ConfigError(Pos where, const std::string& msg) : Error("config error", where, msg) {}
};

class LowerError : public Error {
  public:
    LowerError(Pos where, const std::string& msg) : Error("lowering error", where, msg) {}
};

// Runtime failures (traps, budget exhaustion, corrupt persistent state).
class VmError : public std::runtime_error {
  public:
    VmError(std::string kind, const std::string& msg)
        : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}

    const std::string& kind() const { return kind_; }

  private:
    std::string kind_;
};

}  // namespace purevm
