#pragma once

#include <string>

#include "purevm/infer.hpp"
#include "purevm/ir.hpp"

namespace purevm {

// Specializes every reachable function per call context: arrow and array
// arguments bind statically (select over functions becomes a branch
// lattice resolved at the apply), scalar arguments get dedicated cells.
// Tail calls to a function still being specialized close into loops.
IrProgram lower_program(const TypedProgram& tp, const VmConfig& cfg);

// parse + check + lower + configured optimizations + validation.
IrProgram compile_program(const std::string& source, const VmConfig& cfg);

}  // namespace purevm
