#pragma once

#include <string>
#include <vector>

#include "purevm/types.hpp"

namespace purevm {

// Interpreter opcode for a built-in primitive. Move is compiler-internal
// (cell-to-cell copy) and never appears in the surface catalog.
enum class PrimOp {
    None,
    Move,
    Select,
    Apply,
    Set,
    ToVoid,
    Emit,
    SendCmd,
    GetTemp,
    Eq,
    Ne,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Inc,
    Dec,
    PostInc,
    Lt,
    Le,
    Gt,
    Ge,
    BitAnd,
    BitOr,
    BitXor,
    BitNot,
    Shl,
    Shr,
    And,
    Or,
    Not,
    FAdd,
    FSub,
    FMul,
    FDiv,
    FLt,
    FLe,
    FGt,
    FGe,
    FSqrt,
    ToFloat,
    ToInt,
    GetAt,
    SetAt,
    Len,
};

struct CallableSig {
    TypePtr flow;
    std::vector<TypePtr> params;
    TypePtr result;
};

struct PrimInfo {
    std::string name;
    PrimOp op = PrimOp::None;
    CallableSig sig;
    std::vector<std::string> param_names;
    std::string flow_name;
    bool io = false;
    bool write_flow = false;
    // True when the primitive's flow-out is the flow-in object itself, so
    // the result shares the flow-in slot.
    bool result_is_flow = false;
};

// The built-in primitive set. Stable order; signatures use variable ids
// starting at 1, instantiated fresh per call site.
const std::vector<PrimInfo>& prim_catalog();
const PrimInfo* find_prim(const std::string& name);
const PrimInfo& prim_by_op(PrimOp op);

// Library functions that ship with the compiler, in surface syntax.
const char* prelude_source();

}  // namespace purevm
