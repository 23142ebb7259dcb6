#pragma once

#include <string>

#include "purevm/ast.hpp"

namespace purevm {

// Parses a source buffer into an AST. Throws SyntaxError with a position on
// malformed input; never aborts the process.
SourceProgram parse_program(const std::string& src);

}  // namespace purevm
