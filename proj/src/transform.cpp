#include "purevm/transform.hpp"

#include <vector>

namespace purevm {

namespace {

// Live predecessor counts; handler entries get an extra count so they are
// never merged into a caller.
std::vector<int> pred_counts(const IrProgram& p, const std::vector<bool>& alive) {
    std::vector<int> preds(p.blocks.size(), 0);
    for (const auto& h : p.handlers) preds[h.entry] += 2;
    for (size_t i = 0; i < p.blocks.size(); ++i) {
        if (!alive[i]) continue;
        const Block& b = p.blocks[i];
        switch (b.term.kind) {
            case TermKind::Return: break;
            case TermKind::PushCont:
                for (BlockId t : b.term.conts) preds[t]++;
                break;
            case TermKind::SelectCont:
                preds[b.term.then_block]++;
                preds[b.term.else_block]++;
                break;
        }
    }
    return preds;
}

void sweep_dead(IrProgram& p) {
    std::vector<bool> seen(p.blocks.size(), false);
    std::vector<BlockId> work;
    for (const auto& h : p.handlers) {
        if (!seen[h.entry]) {
            seen[h.entry] = true;
            work.push_back(h.entry);
        }
    }
    while (!work.empty()) {
        BlockId b = work.back();
        work.pop_back();
        auto visit = [&](BlockId t) {
            if (!seen[t]) {
                seen[t] = true;
                work.push_back(t);
            }
        };
        const Block& blk = p.blocks[b];
        if (blk.term.kind == TermKind::PushCont)
            for (BlockId t : blk.term.conts) visit(t);
        if (blk.term.kind == TermKind::SelectCont) {
            visit(blk.term.then_block);
            visit(blk.term.else_block);
        }
    }

    std::vector<BlockId> remap(p.blocks.size(), 0);
    std::vector<Block> kept;
    for (size_t i = 0; i < p.blocks.size(); ++i) {
        if (!seen[i]) continue;
        remap[i] = static_cast<BlockId>(kept.size());
        kept.push_back(std::move(p.blocks[i]));
    }
    for (Block& b : kept) {
        if (b.term.kind == TermKind::PushCont)
            for (BlockId& t : b.term.conts) t = remap[t];
        if (b.term.kind == TermKind::SelectCont) {
            b.term.then_block = remap[b.term.then_block];
            b.term.else_block = remap[b.term.else_block];
        }
    }
    for (auto& h : p.handlers) h.entry = remap[h.entry];
    p.blocks = std::move(kept);
}

}  // namespace

void fuse_blocks(IrProgram& p) {
    std::vector<bool> alive(p.blocks.size(), true);
    bool changed = true;
    while (changed) {
        changed = false;
        auto preds = pred_counts(p, alive);
        for (size_t i = 0; i < p.blocks.size(); ++i) {
            if (!alive[i]) continue;
            for (;;) {
                Block& a = p.blocks[i];
                if (a.term.kind != TermKind::PushCont || a.term.loop_back) break;
                BlockId e = a.term.conts[0];
                if (e == i) break;
                const Block& callee = p.blocks[e];

                if (callee.term.kind == TermKind::Return) {
                    // The whole callee is one block: inline it and route its
                    // result through the flow cell.
                    std::vector<BlockId> rest(a.term.conts.begin() + 1, a.term.conts.end());
                    a.instrs.insert(a.instrs.end(), callee.instrs.begin(), callee.instrs.end());
                    if (rest.empty()) {
                        Terminator t;
                        t.kind = TermKind::Return;
                        t.slot = callee.term.slot;
                        a.term = t;
                    } else {
                        if (callee.term.slot != kFlowSlot) {
                            CallIns m;
                            m.op = PrimOp::Move;
                            m.flow = callee.term.slot;
                            m.result = kFlowSlot;
                            m.tag = p.cells[callee.term.slot].tag;
                            a.instrs.push_back(m);
                        }
                        a.term.conts = rest;
                    }
                    changed = true;
                    continue;
                }
                if (a.term.conts.size() == 1 && preds[e] == 1) {
                    a.instrs.insert(a.instrs.end(), callee.instrs.begin(), callee.instrs.end());
                    a.term = callee.term;
                    alive[e] = false;
                    changed = true;
                    continue;
                }
                break;
            }
        }
    }
    sweep_dead(p);
}

}  // namespace purevm
