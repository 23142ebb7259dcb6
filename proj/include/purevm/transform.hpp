#pragma once

#include "purevm/ir.hpp"

namespace purevm {

// Merges linear continuation chains and inlines single-block callees so a
// dispatch covers more work per transaction. Loop back edges are kept.
void fuse_blocks(IrProgram& p);

}  // namespace purevm
