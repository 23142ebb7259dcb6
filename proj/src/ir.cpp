#include "purevm/ir.hpp"

#include <sstream>

#include "purevm/source.hpp"

namespace purevm {

const char* op_name(PrimOp op) {
    if (op == PrimOp::Move) return "move";
    if (op == PrimOp::None) return "none";
    return prim_by_op(op).name.c_str();
}

const char* tag_name(ValTag t) {
    switch (t) {
        case ValTag::Int: return "Int";
        case ValTag::Float: return "Float";
        case ValTag::Bool: return "Bool";
        case ValTag::Void: return "Void";
        default: return "?";
    }
}

namespace {

void check(bool ok, const std::string& msg) {
    if (!ok) throw LowerError(Pos{0, 0}, msg);
}

void check_slot(const IrProgram& p, Slot s, const char* what) {
    check(s != kNoSlot && s < p.cells.size(), std::string("bad ") + what + " slot");
}

void check_block(const IrProgram& p, BlockId b) {
    check(b < p.blocks.size(), "bad block reference");
}

}  // namespace

void validate_ir(const IrProgram& p) {
    const Layout& L = p.layout;
    check(L.page_size != 0 && p.config.nvm_size % L.page_size == 0, "bad page size");
    check(L.total_words <= p.config.nvm_size, "layout exceeds memory size");
    check(p.image.size() == p.config.nvm_size, "image size mismatch");
    check(L.runtime_base % L.page_size == 0 && L.stack_base % L.page_size == 0 &&
              L.queue_base % L.page_size == 0 && L.globals_base % L.page_size == 0 &&
              L.undo_base % L.page_size == 0,
          "regions must start on page boundaries");
    check(p.cells.size() >= 1 && p.cells[kFlowSlot].addr == L.flow_addr(),
          "slot 0 must be the flow cell");
    check(p.cells.size() <= 0xFFFE, "too many cells");
    check(p.blocks.size() <= 0xFFFF, "too many blocks");
    check(p.handlers.size() == p.config.events.size(), "one handler per configured event");

    for (const auto& c : p.cells)
        check(c.addr + 2 <= L.undo_base || c.addr >= L.runtime_base, "cell outside data regions");
    for (const auto& a : p.arrays)
        check(a.base >= L.globals_base && a.base + 2 * a.len <= L.globals_base + L.globals_words,
              "array outside globals region");

    for (const auto& b : p.blocks) {
        for (const auto& ins : b.instrs) {
            if (ins.op == PrimOp::GetAt || ins.op == PrimOp::SetAt)
                check(ins.array < p.arrays.size(), "bad array reference");
            else
                check(ins.flow != kNoSlot, "instruction without flow slot");
            if (ins.flow != kNoSlot) check_slot(p, ins.flow, "flow");
            if (ins.a != kNoSlot) check_slot(p, ins.a, "arg");
            if (ins.b != kNoSlot) check_slot(p, ins.b, "arg");
            if (ins.result != kNoSlot) check_slot(p, ins.result, "result");
        }
        switch (b.term.kind) {
            case TermKind::Return:
                check_slot(p, b.term.slot, "return");
                break;
            case TermKind::PushCont:
                check(!b.term.conts.empty() && b.term.conts.size() <= 4, "bad continuation list");
                for (BlockId t : b.term.conts) check_block(p, t);
                break;
            case TermKind::SelectCont:
                check_slot(p, b.term.slot, "condition");
                check_block(p, b.term.then_block);
                check_block(p, b.term.else_block);
                break;
        }
    }
    for (const auto& h : p.handlers) {
        check_block(p, h.entry);
        check_slot(p, h.payload, "payload");
    }
    for (const auto& [name, ev] : p.interrupts)
        check(ev < p.handlers.size(), "interrupt targets unknown event");
}

std::string render_ir(const IrProgram& p) {
    std::ostringstream os;
    const Layout& L = p.layout;
    os << "memory " << p.config.nvm_size << " words, page " << L.page_size << ", stack "
       << L.stack_frames << " frames, queue " << L.queue_slots << " slots, undo "
       << L.undo_entries << " entries\n";
    os << "regions runtime@" << L.runtime_base << " stack@" << L.stack_base << " queue@"
       << L.queue_base << " globals@" << L.globals_base << " undo@" << L.undo_base << "\n";

    os << "cells:\n";
    for (size_t i = 0; i < p.cells.size(); ++i) {
        const CellInfo& c = p.cells[i];
        os << "  c" << i << " @" << c.addr;
        if (c.tag != ValTag::Unknown) os << " " << tag_name(c.tag);
        if (!c.name.empty()) os << " " << c.name;
        os << "\n";
    }
    if (!p.arrays.empty()) {
        os << "arrays:\n";
        for (size_t i = 0; i < p.arrays.size(); ++i) {
            const ArrayInfo& a = p.arrays[i];
            os << "  a" << i << " @" << a.base << " " << tag_name(a.tag) << "[" << a.len << "] "
               << a.name << "\n";
        }
    }

    os << "blocks:\n";
    for (size_t i = 0; i < p.blocks.size(); ++i) {
        const Block& b = p.blocks[i];
        os << "  b" << i << " " << b.label << ":\n";
        for (const auto& ins : b.instrs) {
            os << "    " << op_name(ins.op);
            if (ins.op == PrimOp::GetAt || ins.op == PrimOp::SetAt)
                os << " a" << ins.array;
            else
                os << " c" << ins.flow;
            if (ins.a != kNoSlot) os << ", c" << ins.a;
            if (ins.b != kNoSlot) os << ", c" << ins.b;
            if (ins.result != kNoSlot) os << " -> c" << ins.result;
            os << "\n";
        }
        switch (b.term.kind) {
            case TermKind::Return:
                os << "    return c" << b.term.slot << "\n";
                break;
            case TermKind::PushCont:
                os << "    push";
                for (size_t j = 0; j < b.term.conts.size(); ++j)
                    os << (j ? ", b" : " b") << b.term.conts[j];
                if (b.term.loop_back) os << " [loop]";
                os << "\n";
                break;
            case TermKind::SelectCont:
                os << "    branch c" << b.term.slot << " ? b" << b.term.then_block << " : b"
                   << b.term.else_block << "\n";
                break;
        }
    }

    os << "handlers:\n";
    for (size_t i = 0; i < p.handlers.size(); ++i) {
        const HandlerInfo& h = p.handlers[i];
        os << "  " << i << " " << h.name << " entry b" << h.entry << " payload c" << h.payload
           << " " << tag_name(h.payload_tag) << "\n";
    }
    if (!p.interrupts.empty()) {
        os << "interrupts:\n";
        for (const auto& [name, ev] : p.interrupts) os << "  " << name << " -> " << ev << "\n";
    }
    return os.str();
}

}  // namespace purevm
