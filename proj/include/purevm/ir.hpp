#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "purevm/catalog.hpp"
#include "purevm/config.hpp"

namespace purevm {

using Word = std::uint16_t;
using Addr = std::uint32_t;
using Slot = std::uint16_t;
using BlockId = std::uint16_t;

inline constexpr Slot kNoSlot = 0xFFFF;
inline constexpr std::uint16_t kNoArray = 0xFFFF;
// Slot 0 is the flow cell: call results pass through it.
inline constexpr Slot kFlowSlot = 0;

enum class ValTag : std::uint8_t { Unknown, Int, Float, Bool, Void };

// One primitive call. Operands are cell slots; `array` names the flow-in
// array for getAt/setAt. Write primitives whose flow-out is the flow-in
// reuse the flow slot as result.
struct CallIns {
    PrimOp op = PrimOp::None;
    Slot flow = kNoSlot;
    Slot a = kNoSlot;
    Slot b = kNoSlot;
    Slot result = kNoSlot;
    std::uint16_t array = kNoArray;
    // Value interpretation where it matters: eq/ne pick float or bitwise
    // comparison, emit stamps its output record.
    ValTag tag = ValTag::Unknown;
};

enum class TermKind : std::uint8_t { Return, PushCont, SelectCont };

struct Terminator {
    TermKind kind = TermKind::Return;
    // Return: value slot. SelectCont: condition slot.
    Slot slot = kNoSlot;
    BlockId then_block = 0;
    BlockId else_block = 0;
    // PushCont: first listed runs first.
    std::vector<BlockId> conts;
    // Marks a tail call back into an enclosing recursive function, i.e. a
    // loop back edge.
    bool loop_back = false;
};

struct Block {
    std::string label;
    std::vector<CallIns> instrs;
    Terminator term;
};

struct CellInfo {
    Addr addr = 0;
    ValTag tag = ValTag::Unknown;
    std::string name;
    bool literal = false;
};

struct ArrayInfo {
    Addr base = 0;
    std::uint32_t len = 0;
    ValTag tag = ValTag::Unknown;
    std::string name;
};

struct HandlerInfo {
    BlockId entry = 0;
    Slot payload = 0;
    ValTag payload_tag = ValTag::Void;
    std::string name;
};

// Word-granular memory map. Regions are page-aligned and laid out in
// order: runtime page, stack, queue, globals, undo log.
//
// The queue head and tail indexes live on separate pages so that an
// interrupt enqueue (which writes entry slots and the tail) never shares a
// page with the consumer's head bump; rolling back a dispatch transaction
// therefore cannot lose a concurrent enqueue. The drop counter is producer
// state and sits next to the tail.
struct Layout {
    std::uint32_t page_size = 0;
    Addr runtime_base = 0;
    Addr stack_base = 0;
    std::uint32_t stack_frames = 0;
    Addr queue_base = 0;
    std::uint32_t queue_slots = 0;  // physical ring slots, capacity + 2
    Addr globals_base = 0;
    std::uint32_t globals_words = 0;
    Addr undo_base = 0;
    std::uint32_t undo_entries = 0;
    std::uint32_t total_words = 0;

    // Runtime page word offsets.
    static constexpr Addr kSp = 0;
    static constexpr Addr kSleepDone = 1;
    static constexpr Addr kFlow = 2;   // 2 words
    static constexpr Addr kSeq = 4;    // 2 words
    static constexpr Addr kCkptA = 6;  // seq, block, ip
    static constexpr Addr kCkptB = 9;
    static constexpr Addr kRuntimeWords = 12;

    Addr sp_addr() const { return runtime_base + kSp; }
    Addr sleep_done_addr() const { return runtime_base + kSleepDone; }
    Addr flow_addr() const { return runtime_base + kFlow; }
    Addr seq_addr() const { return runtime_base + kSeq; }
    Addr ckpt_addr(int buf) const { return runtime_base + (buf == 0 ? kCkptA : kCkptB); }
    Addr frame_addr(std::uint32_t f) const { return stack_base + f; }
    Addr queue_head_addr() const { return queue_base; }
    Addr queue_tail_addr() const { return queue_base + page_size; }
    Addr drop_addr() const { return queue_base + page_size + 1; }
    Addr queue_slot_addr(std::uint32_t i) const { return queue_base + 2 * page_size + 4 * i; }
    Addr undo_count_addr() const { return undo_base; }
    Addr undo_entry_addr(std::uint32_t e) const { return undo_base + 1 + e * (2 + page_size); }
};

struct IrProgram {
    VmConfig config;
    Layout layout;
    std::vector<CellInfo> cells;
    std::vector<ArrayInfo> arrays;
    std::vector<Block> blocks;
    // Indexed by event id, aligned with config.events.
    std::vector<HandlerInfo> handlers;
    // Interrupt name -> target event id.
    std::vector<std::pair<std::string, std::uint16_t>> interrupts;
    // Declared scalar globals in declaration order (name, cell slot).
    std::vector<std::pair<std::string, Slot>> global_slots;
    // Initial memory contents, config.nvm_size words.
    std::vector<Word> image;

    int event_id(const std::string& name) const {
        for (size_t i = 0; i < config.events.size(); ++i)
            if (config.events[i] == name) return static_cast<int>(i);
        return -1;
    }
};

const char* op_name(PrimOp op);
const char* tag_name(ValTag t);

// Structural checks: operand and target ranges, region consistency,
// handler coverage. Throws LowerError on violation.
void validate_ir(const IrProgram& p);

// Stable text listing of cells, arrays, blocks and handlers.
std::string render_ir(const IrProgram& p);

}  // namespace purevm
