#include "purevm/vm.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <sstream>

namespace purevm {

namespace {

std::uint32_t f2b(float f) { return std::bit_cast<std::uint32_t>(f); }
float b2f(std::uint32_t b) { return std::bit_cast<float>(b); }

}  // namespace

Engine::Engine(const IrProgram& prog, PowerDriver& power, RunScript script)
    : prog_(prog),
      power_(power),
      script_(std::move(script)),
      mem_(prog.image, prog.layout.page_size),
      L_(prog.layout),
      backend_(prog.config.backend) {
    loop_opt_ = prog_.config.has_opt(Optimization::LoopOpt);
    unroll_ = prog_.config.loop_unroll;
    cap_ = prog_.config.queue_capacity;
    boot_id_ = prog_.event_id("boot");
    reboot_id_ = prog_.event_id("reboot");
    sleep_id_ = prog_.event_id("sleep");
    if (boot_id_ < 0 || reboot_id_ < 0 || sleep_id_ < 0)
        throw ConfigError(Pos{0, 0}, "program is missing a boot, reboot or sleep event");

    switch (backend_) {
    case Backend::Test:
        if (power_.mode() != PowerMode::Continuous)
            throw ConfigError(Pos{0, 0}, "the test backend requires a continuous power supply");
        break;
    case Backend::JustInTime:
        if (power_.mode() == PowerMode::Schedule)
            throw ConfigError(
                Pos{0, 0},
                "scheduled power failures cannot be combined with just-in-time checkpoints");
        if (power_.mode() == PowerMode::Energy) {
            power_.set_margin(kJitMargin);
            if (power_.headroom() <= 2 * kJitMargin)
                throw ConfigError(Pos{0, 0}, "energy capacity is too small for the checkpoint margin");
        }
        break;
    case Backend::Rewinding:
        // An energy buffer too small to finish any transaction shows up as
        // a detected non-termination at run time, not a config error.
        break;
    }

    // Interrupt name -> event id, resolved once.
    for (const auto& ev : script_.events) {
        bool known = false;
        for (const auto& [name, id] : prog_.interrupts)
            if (name == ev.interrupt) known = true;
        if (!known)
            throw ConfigError(Pos{0, 0}, "script interrupt '" + ev.interrupt +
                                         "' is not declared by the program");
    }
}

void Engine::trap(const std::string& msg) { throw VmError("trap", msg); }

// --- memory access -------------------------------------------------------
//
// Every word touched goes through tick(), so power failure can strike
// between any two physical operations. Pending script interrupts fire
// before the operation they precede.

void Engine::tick(std::uint32_t cost, Bucket b) {
    if (!in_isr_) pump_script();
    switch (b) {
    case BUseful: rep_.split.useful++; break;
    case BUndo: rep_.split.undo++; break;
    case BStack: rep_.split.stack++; break;
    case BDispatch: rep_.split.consume_commit++; break;
    }
    power_.tick(cost);
    if (power_.steps() > max_steps_) throw VmError("limit", "step budget exceeded");
}

Word Engine::rd(Addr a, Bucket b) {
    // Counters track attempts: the dying access has drawn its energy.
    rep_.word_reads++;
    tick(kCostWordRead, b);
    if (trace_out) *trace_out << power_.steps() << " read " << a << "\n";
    return mem_.read(a);
}

void Engine::wr_raw(Addr a, Word v, Bucket b) {
    rep_.word_writes++;
    tick(kCostWordWrite, b);
    if (trace_out)
        *trace_out << power_.steps() << " write " << a << " page " << a / L_.page_size << "\n";
    mem_.write(a, v);
}

void Engine::wr(Addr a, Word v, Bucket b) {
    if (tx_active_ && backend_ == Backend::Rewinding && a < L_.undo_base)
        log_page(a / L_.page_size);
    wr_raw(a, v, b);
}

std::uint32_t Engine::rd_cell(Slot s, Bucket b) {
    Addr a = prog_.cells[s].addr;
    std::uint32_t lo = rd(a, b);
    std::uint32_t hi = rd(a + 1, b);
    return lo | (hi << 16);
}

void Engine::wr_cell(Slot s, std::uint32_t v, Bucket b) {
    Addr a = prog_.cells[s].addr;
    wr(a, static_cast<Word>(v & 0xFFFF), b);
    wr(a + 1, static_cast<Word>(v >> 16), b);
}

void Engine::wr_cell_raw(Slot s, std::uint32_t v, Bucket b) {
    Addr a = prog_.cells[s].addr;
    wr_raw(a, static_cast<Word>(v & 0xFFFF), b);
    wr_raw(a + 1, static_cast<Word>(v >> 16), b);
}

// --- undo log ------------------------------------------------------------

void Engine::log_page(std::uint32_t page) {
    // Search the log so a page is snapshotted at most once per
    // transaction; the entry headers in nvm are the authority.
    for (std::uint32_t e = 0; e < tx_pages_.size(); e++)
        if (rd(L_.undo_entry_addr(e), BUndo) == page) return;
    std::uint32_t idx = static_cast<std::uint32_t>(tx_pages_.size());
    if (idx >= L_.undo_entries) throw VmError("limit", "undo log overflow");
    tx_pages_.push_back(page);
    Addr ea = L_.undo_entry_addr(idx);
    wr_raw(ea, static_cast<Word>(page), BUndo);
    // The snapshot itself is a single page-copy step.
    rep_.page_copies++;
    tick(kCostPageCopyPerWord * L_.page_size, BUndo);
    if (trace_out) *trace_out << power_.steps() << " snapshot page " << page << "\n";
    Addr base = page * L_.page_size;
    for (std::uint32_t w = 0; w < L_.page_size; w++)
        mem_.write(ea + 2 + w, mem_.read(base + w));
    // Bumping the count publishes the entry; a crash before this point
    // leaves the snapshot invisible.
    wr_raw(L_.undo_count_addr(), static_cast<Word>(idx + 1), BUndo);
}

void Engine::undo_restore() {
    std::uint32_t cnt = rd(L_.undo_count_addr(), BUndo);
    if (cnt == 0) return;
    if (cnt > L_.undo_entries) throw VmError("trap", "undo log count out of range");
    for (std::uint32_t e = 0; e < cnt; e++) {
        Addr ea = L_.undo_entry_addr(e);
        std::uint32_t page = rd(ea, BUndo);
        if ((page + 1) * L_.page_size > mem_.size())
            throw VmError("trap", "undo log page out of range");
        rep_.page_copies++;
        tick(kCostPageCopyPerWord * L_.page_size, BUndo);
        if (trace_out) *trace_out << power_.steps() << " restore page " << page << "\n";
        Addr base = page * L_.page_size;
        for (std::uint32_t w = 0; w < L_.page_size; w++)
            mem_.write(base + w, mem_.read(ea + 2 + w));
    }
    // Clearing the count retires the log; re-running the restore after
    // another crash is harmless because snapshots are absolute.
    wr_raw(L_.undo_count_addr(), 0, BUndo);
    rep_.rollbacks++;
}

// --- transactions --------------------------------------------------------

void Engine::tx_begin() {
    tx_active_ = true;
    tx_pages_.clear();
    tx_out_.clear();
    in_batch_ = false;
    iters_ = 0;
}

void Engine::tx_abort() {
    tx_active_ = false;
    tx_pages_.clear();
    tx_out_.clear();
    in_batch_ = false;
    iters_ = 0;
    in_isr_ = false;
}

void Engine::tx_commit(std::uint32_t vsp) {
    wr(L_.sp_addr(), static_cast<Word>(vsp), BStack);
    Addr sa = L_.seq_addr();
    std::uint32_t seq = rd(sa, BDispatch) | (static_cast<std::uint32_t>(rd(sa + 1, BDispatch)) << 16);
    seq++;
    wr(sa, static_cast<Word>(seq & 0xFFFF), BDispatch);
    wr(sa + 1, static_cast<Word>(seq >> 16), BDispatch);
    if (backend_ == Backend::Rewinding)
        wr_raw(L_.undo_count_addr(), 0, BUndo);  // the commit point
    tx_active_ = false;
    tx_pages_.clear();
    for (const auto& o : tx_out_) rep_.outputs.push_back(o);
    tx_out_.clear();
    rep_.txns++;
    reboots_since_commit_ = 0;
    if (on_commit) on_commit(*this);
}

// --- just-in-time checkpoints --------------------------------------------
//
// A checkpoint is (marker, block, ip) where marker = seq + 1 identifies
// the dispatch step in progress. Once that step completes and bumps seq,
// stale checkpoints stop matching and are ignored at reboot.

void Engine::jit_checkpoint(std::uint16_t block, std::uint16_t ip) {
    Addr sa = L_.seq_addr();
    std::uint32_t seq = rd(sa, BDispatch) | (static_cast<std::uint32_t>(rd(sa + 1, BDispatch)) << 16);
    Addr b = L_.ckpt_addr(ckpt_next_);
    wr_raw(b + 1, block, BDispatch);
    wr_raw(b + 2, ip, BDispatch);
    wr_raw(b, static_cast<Word>((seq + 1) & 0xFFFF), BDispatch);
    ckpt_next_ ^= 1;
    rep_.checkpoints++;
}

void Engine::jit_restore() {
    Addr sa = L_.seq_addr();
    std::uint32_t seq = rd(sa, BDispatch) | (static_cast<std::uint32_t>(rd(sa + 1, BDispatch)) << 16);
    Word want = static_cast<Word>((seq + 1) & 0xFFFF);
    bool found = false;
    std::uint16_t blk = 0, ip = 0;
    for (int buf = 0; buf < 2; buf++) {
        Addr b = L_.ckpt_addr(buf);
        if (rd(b, BDispatch) != want) continue;
        std::uint16_t cb = rd(b + 1, BDispatch);
        std::uint16_t ci = rd(b + 2, BDispatch);
        // Two live checkpoints can only be successive saves within one
        // block; the later instruction pointer wins.
        if (!found || ci > ip) { blk = cb; ip = ci; found = true; }
    }
    if (found) {
        if (blk >= prog_.blocks.size() || ip > prog_.blocks[blk].instrs.size())
            throw VmError("trap", "checkpoint cursor out of range");
        resume_valid_ = true;
        resume_block_ = blk;
        resume_ip_ = ip;
    }
}

void Engine::jit_boundary(std::uint16_t block, std::uint16_t ip) {
    if (power_.mode() != PowerMode::Energy) return;
    if (!power_.low_energy()) return;
    jit_checkpoint(block, ip);
    power_.force_crash();
}

// --- event queue ---------------------------------------------------------

void Engine::pump_script() {
    while (next_script_ < script_.events.size() &&
           script_.events[next_script_].at_step <= power_.steps()) {
        const ScriptEvent& ev = script_.events[next_script_];
        std::uint16_t id = 0;
        for (const auto& [name, eid] : prog_.interrupts)
            if (name == ev.interrupt) id = eid;
        if (!try_enqueue(id, ev.payload_bits)) break;  // queue full, retried later
        next_script_++;
    }
}

bool Engine::try_enqueue(std::uint16_t ev, std::uint32_t payload) {
    // Producer critical section: interrupts are masked so two producers
    // cannot interleave on the tail.
    bool saved = in_isr_;
    in_isr_ = true;
    std::uint32_t M = L_.queue_slots;
    std::uint32_t head = rd(L_.queue_head_addr(), BDispatch);
    std::uint32_t tail = rd(L_.queue_tail_addr(), BDispatch);
    if (head >= M || tail >= M) throw VmError("trap", "queue index out of range");
    if ((tail - head + M) % M >= cap_) {
        in_isr_ = saved;
        return false;
    }
    Addr slot = L_.queue_slot_addr(tail);
    wr_raw(slot, ev, BDispatch);
    wr_raw(slot + 1, static_cast<Word>(payload & 0xFFFF), BDispatch);
    wr_raw(slot + 2, static_cast<Word>(payload >> 16), BDispatch);
    // The tail bump publishes the entry.
    wr_raw(L_.queue_tail_addr(), static_cast<Word>((tail + 1) % M), BDispatch);
    rep_.enqueued++;
    in_isr_ = saved;
    return true;
}

bool Engine::consume_event() {
    if (backend_ == Backend::JustInTime) {
        if (power_.mode() == PowerMode::Energy && power_.low_energy()) power_.force_crash();
    }
    if (backend_ == Backend::Rewinding) tx_begin();
    std::uint32_t M = L_.queue_slots;
    std::uint32_t head = rd(L_.queue_head_addr(), BDispatch);
    std::uint32_t tail = rd(L_.queue_tail_addr(), BDispatch);
    if (head >= M || tail >= M) throw VmError("trap", "queue index out of range");
    if (head == tail) {
        tx_abort();
        return false;
    }
    Addr slot = L_.queue_slot_addr(head);
    std::uint16_t ev = rd(slot, BDispatch);
    std::uint32_t lo = rd(slot + 1, BDispatch);
    std::uint32_t hi = rd(slot + 2, BDispatch);
    if (ev >= prog_.handlers.size()) throw VmError("trap", "queued event id out of range");
    const HandlerInfo& h = prog_.handlers[ev];
    wr_cell(h.payload, lo | (hi << 16), BDispatch);
    if (static_cast<int>(ev) == sleep_id_) wr(L_.sleep_done_addr(), 1, BDispatch);
    std::uint32_t sp = rd(L_.sp_addr(), BStack);
    if (sp >= L_.stack_frames) throw VmError("limit", "stack overflow");
    wr(L_.frame_addr(sp), h.entry, BStack);
    wr(L_.queue_head_addr(), static_cast<Word>((head + 1) % M), BDispatch);
    tx_commit(sp + 1);
    rep_.dispatched++;
    return true;
}

// --- dispatch ------------------------------------------------------------

bool Engine::step_dispatch() {
    if (backend_ == Backend::JustInTime) {
        BlockId cur;
        std::uint16_t ip0 = 0;
        if (resume_valid_) {
            cur = resume_block_;
            ip0 = resume_ip_;
            resume_valid_ = false;
        } else {
            if (power_.mode() == PowerMode::Energy && power_.low_energy()) power_.force_crash();
            std::uint32_t sp = rd(L_.sp_addr(), BStack);
            if (sp == 0) return false;
            cur = static_cast<BlockId>(rd(L_.frame_addr(sp - 1), BStack));
            if (cur >= prog_.blocks.size()) throw VmError("trap", "stack frame out of range");
            // The pop is physical up front; the checkpoint cursor alone
            // names the work in progress.
            wr_raw(L_.sp_addr(), static_cast<Word>(sp - 1), BStack);
        }
        const Block& blk = prog_.blocks[cur];
        for (std::uint16_t ip = ip0; ip < blk.instrs.size(); ip++) {
            jit_boundary(cur, ip);
            if (collect_trace) trace.push_back((static_cast<std::uint32_t>(cur) << 16) | ip);
            exec_ins(blk.instrs[ip], cur, ip);
        }
        jit_boundary(cur, static_cast<std::uint16_t>(blk.instrs.size()));
        const Terminator& t = blk.term;
        std::uint32_t sp = rd(L_.sp_addr(), BStack);
        switch (t.kind) {
        case TermKind::Return:
            wr_cell(kFlowSlot, rd_cell(t.slot, BStack), BStack);
            break;
        case TermKind::PushCont: {
            if (sp + t.conts.size() > L_.stack_frames)
                throw VmError("limit", "stack overflow");
            for (std::size_t i = t.conts.size(); i-- > 0;)
                wr(L_.frame_addr(sp + (t.conts.size() - 1 - i)), t.conts[i], BStack);
            wr(L_.sp_addr(), static_cast<Word>(sp + t.conts.size()), BStack);
            break;
        }
        case TermKind::SelectCont: {
            std::uint32_t c = rd_cell(t.slot, BUseful);
            if (sp >= L_.stack_frames) throw VmError("limit", "stack overflow");
            wr(L_.frame_addr(sp), c ? t.then_block : t.else_block, BStack);
            wr(L_.sp_addr(), static_cast<Word>(sp + 1), BStack);
            break;
        }
        }
        // Bump the step sequence; checkpoints taken inside this block go
        // stale from here on.
        Addr sa = L_.seq_addr();
        std::uint32_t seq =
            rd(sa, BDispatch) | (static_cast<std::uint32_t>(rd(sa + 1, BDispatch)) << 16);
        seq++;
        wr(sa, static_cast<Word>(seq & 0xFFFF), BDispatch);
        wr(sa + 1, static_cast<Word>(seq >> 16), BDispatch);
        rep_.txns++;
        reboots_since_commit_ = 0;
        if (on_commit) on_commit(*this);
        return true;
    }

    if (backend_ == Backend::Rewinding) tx_begin();
    std::uint32_t sp = rd(L_.sp_addr(), BStack);
    if (sp == 0) {
        tx_abort();
        return false;
    }
    if (sp > L_.stack_frames) throw VmError("trap", "stack pointer out of range");
    BlockId cur = static_cast<BlockId>(rd(L_.frame_addr(sp - 1), BStack));
    std::uint32_t vsp = sp - 1;

    auto batch_ok = [&]() {
        return backend_ == Backend::Rewinding && loop_opt_ && in_batch_ && iters_ < unroll_ &&
               tx_pages_.size() + 4 <= L_.undo_entries;
    };

    for (;;) {
        if (cur >= prog_.blocks.size()) throw VmError("trap", "stack frame out of range");
        const Block& blk = prog_.blocks[cur];
        for (std::uint16_t ip = 0; ip < blk.instrs.size(); ip++) {
            if (collect_trace) trace.push_back((static_cast<std::uint32_t>(cur) << 16) | ip);
            exec_ins(blk.instrs[ip], cur, ip);
        }
        const Terminator& t = blk.term;
        switch (t.kind) {
        case TermKind::Return: {
            wr_cell(kFlowSlot, rd_cell(t.slot, BStack), BStack);
            if (vsp == 0) {
                tx_commit(0);
                return true;
            }
            if (batch_ok()) {
                cur = static_cast<BlockId>(rd(L_.frame_addr(vsp - 1), BStack));
                vsp--;
                continue;
            }
            tx_commit(vsp);
            return true;
        }
        case TermKind::PushCont: {
            if (vsp + t.conts.size() > L_.stack_frames)
                throw VmError("limit", "stack overflow");
            for (std::size_t i = t.conts.size(); i-- > 1;) {
                wr(L_.frame_addr(vsp), t.conts[i], BStack);
                vsp++;
            }
            if (t.loop_back) {
                in_batch_ = true;
                iters_++;
            }
            if (batch_ok()) {
                cur = t.conts[0];
                continue;
            }
            wr(L_.frame_addr(vsp), t.conts[0], BStack);
            vsp++;
            tx_commit(vsp);
            return true;
        }
        case TermKind::SelectCont: {
            std::uint32_t c = rd_cell(t.slot, BUseful);
            BlockId chosen = c ? t.then_block : t.else_block;
            if (batch_ok()) {
                cur = chosen;
                continue;
            }
            if (vsp >= L_.stack_frames) throw VmError("limit", "stack overflow");
            wr(L_.frame_addr(vsp), chosen, BStack);
            vsp++;
            tx_commit(vsp);
            return true;
        }
        }
    }
}

// --- instruction semantics -----------------------------------------------

float Engine::next_temp() {
    if (script_.temps.empty()) return 20.0f;
    float t = script_.temps[temp_idx_ % script_.temps.size()];
    temp_idx_++;
    return t;
}

void Engine::out(ValTag tag, std::uint32_t bits, bool io) {
    OutputRecord r{tag, bits, io};
    if (backend_ == Backend::Rewinding && tx_active_)
        tx_out_.push_back(r);
    else
        rep_.outputs.push_back(r);
}

void Engine::exec_ins(const CallIns& ins, BlockId block, std::uint16_t ip) {
    (void)block;
    (void)ip;
    auto prim = [&]() {
        rep_.prim_execs++;
        tick(kCostPrimExec, BUseful);
        if (trace_out) *trace_out << power_.steps() << " exec " << op_name(ins.op) << "\n";
    };
    auto io = [&]() {
        rep_.io_execs++;
        tick(kCostIoExec, BUseful);
        if (trace_out) *trace_out << power_.steps() << " io " << op_name(ins.op) << "\n";
    };
    auto geti = [&](Slot s) { return static_cast<std::int32_t>(rd_cell(s, BUseful)); };
    auto getf = [&](Slot s) { return b2f(rd_cell(s, BUseful)); };
    auto put = [&](std::uint32_t v) { wr_cell(ins.result, v, BUseful); };
    auto puti = [&](std::int64_t v) { put(static_cast<std::uint32_t>(v & 0xFFFFFFFFll)); };
    auto putb = [&](bool v) { put(v ? 1u : 0u); };
    auto putf = [&](float v) { put(f2b(v)); };

    switch (ins.op) {
    case PrimOp::Move:
        wr_cell(ins.result, rd_cell(ins.flow, BUseful), BUseful);
        return;
    case PrimOp::Select: {
        prim();
        std::uint32_t c = rd_cell(ins.flow, BUseful);
        put(rd_cell(c ? ins.a : ins.b, BUseful));
        return;
    }
    case PrimOp::Set:
        prim();
        put(rd_cell(ins.a, BUseful));
        return;
    case PrimOp::Emit:
        prim();
        out(ins.tag, rd_cell(ins.flow, BUseful), false);
        return;
    case PrimOp::SendCmd: {
        io();
        std::uint32_t v = rd_cell(ins.flow, BUseful);
        // The wire sees the command immediately, commit or not.
        rep_.raw_io.push_back({ins.tag, v, true});
        out(ins.tag, v, true);
        return;
    }
    case PrimOp::GetTemp:
        io();
        putf(next_temp());
        return;
    case PrimOp::Eq:
    case PrimOp::Ne: {
        prim();
        bool eq;
        if (ins.tag == ValTag::Float)
            eq = getf(ins.flow) == getf(ins.a);
        else
            eq = rd_cell(ins.flow, BUseful) == rd_cell(ins.a, BUseful);
        putb(ins.op == PrimOp::Eq ? eq : !eq);
        return;
    }
    case PrimOp::Add: prim(); puti(static_cast<std::int64_t>(geti(ins.flow)) + geti(ins.a)); return;
    case PrimOp::Sub: prim(); puti(static_cast<std::int64_t>(geti(ins.flow)) - geti(ins.a)); return;
    case PrimOp::Mul: prim(); puti(static_cast<std::int64_t>(geti(ins.flow)) * geti(ins.a)); return;
    case PrimOp::Div: {
        prim();
        std::int32_t n = geti(ins.flow), d = geti(ins.a);
        if (d == 0) trap("division by zero");
        if (n == INT32_MIN && d == -1) trap("division overflow");
        puti(n / d);
        return;
    }
    case PrimOp::Mod: {
        prim();
        std::int32_t n = geti(ins.flow), d = geti(ins.a);
        if (d == 0) trap("division by zero");
        if (n == INT32_MIN && d == -1) trap("division overflow");
        puti(n % d);
        return;
    }
    case PrimOp::Inc: prim(); puti(static_cast<std::int64_t>(geti(ins.flow)) + 1); return;
    case PrimOp::Dec: prim(); puti(static_cast<std::int64_t>(geti(ins.flow)) - 1); return;
    case PrimOp::PostInc: {
        prim();
        std::int32_t v = geti(ins.flow);
        put(static_cast<std::uint32_t>(v));
        wr_cell(ins.flow, static_cast<std::uint32_t>(v) + 1u, BUseful);
        return;
    }
    case PrimOp::Lt: prim(); putb(geti(ins.flow) < geti(ins.a)); return;
    case PrimOp::Le: prim(); putb(geti(ins.flow) <= geti(ins.a)); return;
    case PrimOp::Gt: prim(); putb(geti(ins.flow) > geti(ins.a)); return;
    case PrimOp::Ge: prim(); putb(geti(ins.flow) >= geti(ins.a)); return;
    case PrimOp::BitAnd: prim(); put(rd_cell(ins.flow, BUseful) & rd_cell(ins.a, BUseful)); return;
    case PrimOp::BitOr: prim(); put(rd_cell(ins.flow, BUseful) | rd_cell(ins.a, BUseful)); return;
    case PrimOp::BitXor: prim(); put(rd_cell(ins.flow, BUseful) ^ rd_cell(ins.a, BUseful)); return;
    case PrimOp::BitNot: prim(); put(~rd_cell(ins.flow, BUseful)); return;
    case PrimOp::Shl: prim(); put(rd_cell(ins.flow, BUseful) << (rd_cell(ins.a, BUseful) & 31)); return;
    case PrimOp::Shr: prim(); put(rd_cell(ins.flow, BUseful) >> (rd_cell(ins.a, BUseful) & 31)); return;
    case PrimOp::And: prim(); putb(rd_cell(ins.flow, BUseful) && rd_cell(ins.a, BUseful)); return;
    case PrimOp::Or: prim(); putb(rd_cell(ins.flow, BUseful) || rd_cell(ins.a, BUseful)); return;
    case PrimOp::Not: prim(); putb(!rd_cell(ins.flow, BUseful)); return;
    case PrimOp::FAdd: prim(); putf(getf(ins.flow) + getf(ins.a)); return;
    case PrimOp::FSub: prim(); putf(getf(ins.flow) - getf(ins.a)); return;
    case PrimOp::FMul: prim(); putf(getf(ins.flow) * getf(ins.a)); return;
    case PrimOp::FDiv: prim(); putf(getf(ins.flow) / getf(ins.a)); return;
    case PrimOp::FLt: prim(); putb(getf(ins.flow) < getf(ins.a)); return;
    case PrimOp::FLe: prim(); putb(getf(ins.flow) <= getf(ins.a)); return;
    case PrimOp::FGt: prim(); putb(getf(ins.flow) > getf(ins.a)); return;
    case PrimOp::FGe: prim(); putb(getf(ins.flow) >= getf(ins.a)); return;
    case PrimOp::FSqrt: prim(); putf(std::sqrt(getf(ins.flow))); return;
    case PrimOp::ToFloat: prim(); putf(static_cast<float>(geti(ins.flow))); return;
    case PrimOp::ToInt: {
        prim();
        float f = getf(ins.flow);
        if (!(f > -2147483649.0f && f < 2147483648.0f))
            trap("float to integer conversion out of range");
        puti(static_cast<std::int32_t>(f));
        return;
    }
    case PrimOp::GetAt: {
        prim();
        const ArrayInfo& arr = prog_.arrays[ins.array];
        std::int32_t i = geti(ins.a);
        if (i < 0 || static_cast<std::uint32_t>(i) >= arr.len)
            trap("array index out of range");
        Addr a = arr.base + 2 * static_cast<std::uint32_t>(i);
        std::uint32_t lo = rd(a, BUseful), hi = rd(a + 1, BUseful);
        put(lo | (hi << 16));
        return;
    }
    case PrimOp::SetAt: {
        prim();
        const ArrayInfo& arr = prog_.arrays[ins.array];
        std::int32_t i = geti(ins.a);
        if (i < 0 || static_cast<std::uint32_t>(i) >= arr.len)
            trap("array index out of range");
        std::uint32_t v = rd_cell(ins.b, BUseful);
        Addr a = arr.base + 2 * static_cast<std::uint32_t>(i);
        wr(a, static_cast<Word>(v & 0xFFFF), BUseful);
        wr(a + 1, static_cast<Word>(v >> 16), BUseful);
        return;
    }
    default:
        throw VmError("trap", std::string("unexpected instruction '") + op_name(ins.op) + "'");
    }
}

// --- lifecycle -----------------------------------------------------------

void Engine::do_reboot() {
    if (backend_ == Backend::Rewinding) undo_restore();
    if (backend_ == Backend::JustInTime) jit_restore();
    // A fresh boot that died before announcing itself retries the boot
    // event instead of reporting a reboot.
    if (!booted_) return;
    if (!try_enqueue(static_cast<std::uint16_t>(reboot_id_), 0)) {
        Word d = rd(L_.drop_addr(), BDispatch);
        wr_raw(L_.drop_addr(), static_cast<Word>(d + 1), BDispatch);
        rep_.dropped++;
    }
}

RunReport Engine::run(std::uint64_t max_steps) {
    max_steps_ = max_steps;
    for (;;) {
        try {
            if (need_reboot_) {
                // Interrupts stay masked until recovery has run and the
                // reboot notification is queued, so no interrupt can slip
                // ahead of a boot still waiting to be queued.
                in_isr_ = true;
                do_reboot();
                in_isr_ = false;
                need_reboot_ = false;
            }
            if (!booted_) {
                try_enqueue(static_cast<std::uint16_t>(boot_id_), 0);
                booted_ = true;
            }
            if (step_dispatch()) continue;
            if (consume_event()) continue;
            if (next_script_ < script_.events.size()) {
                // Idle until the next interrupt arrives.
                tick(0, BDispatch);
                continue;
            }
            if (rd(L_.sleep_done_addr(), BDispatch) == 0) {
                try_enqueue(static_cast<std::uint16_t>(sleep_id_), 0);
                continue;
            }
            rep_.halted = true;
            break;
        } catch (PowerFailure&) {
            rep_.reboots++;
            reboots_since_commit_++;
            tx_abort();
            resume_valid_ = false;
            power_.reboot();
            need_reboot_ = true;
            if (reboots_since_commit_ > 10000) {
                rep_.trap = "limit: no progress across 10000 reboots";
                break;
            }
        } catch (VmError& e) {
            tx_abort();
            rep_.trap = e.what();
            break;
        }
    }
    rep_.steps = power_.steps();
    return rep_;
}

// --- inspection ----------------------------------------------------------

std::uint32_t Engine::cell_bits(Slot s) const {
    Addr a = prog_.cells[s].addr;
    return static_cast<std::uint32_t>(mem_.read(a)) |
           (static_cast<std::uint32_t>(mem_.read(a + 1)) << 16);
}

std::uint32_t Engine::global_bits(const std::string& name) const {
    for (const auto& [n, s] : prog_.global_slots)
        if (n == name) return cell_bits(s);
    throw VmError("inspect", "no scalar global named '" + name + "'");
}

std::vector<std::uint32_t> Engine::globals_snapshot() const {
    std::vector<std::uint32_t> v;
    for (const auto& [n, s] : prog_.global_slots) v.push_back(cell_bits(s));
    for (const auto& arr : prog_.arrays)
        for (std::uint32_t i = 0; i < arr.len; i++) {
            Addr a = arr.base + 2 * i;
            v.push_back(static_cast<std::uint32_t>(mem_.read(a)) |
                        (static_cast<std::uint32_t>(mem_.read(a + 1)) << 16));
        }
    return v;
}

std::string render_run_report(const RunReport& r) {
    std::ostringstream os;
    os.precision(9);
    os << "halted " << (r.halted ? 1 : 0) << "\n";
    os << "trap " << (r.trap.empty() ? "-" : r.trap) << "\n";
    os << "steps " << r.steps << "\n";
    os << "word_reads " << r.word_reads << "\n";
    os << "word_writes " << r.word_writes << "\n";
    os << "prim_execs " << r.prim_execs << "\n";
    os << "io_execs " << r.io_execs << "\n";
    os << "page_copies " << r.page_copies << "\n";
    os << "txns " << r.txns << "\n";
    os << "rollbacks " << r.rollbacks << "\n";
    os << "reboots " << r.reboots << "\n";
    os << "checkpoints " << r.checkpoints << "\n";
    os << "enqueued " << r.enqueued << "\n";
    os << "dispatched " << r.dispatched << "\n";
    os << "dropped " << r.dropped << "\n";
    os << "split_useful " << r.split.useful << "\n";
    os << "split_undo " << r.split.undo << "\n";
    os << "split_stack " << r.split.stack << "\n";
    os << "split_consume_commit " << r.split.consume_commit << "\n";
    os << "outputs " << r.outputs.size() << "\n";
    for (const OutputRecord& o : r.outputs) {
        os << (o.io ? "cmd " : "out ") << tag_name(o.tag) << " ";
        switch (o.tag) {
        case ValTag::Int: os << static_cast<std::int32_t>(o.bits); break;
        case ValTag::Float: os << b2f(o.bits); break;
        case ValTag::Bool: os << (o.bits ? "true" : "false"); break;
        default: os << o.bits; break;
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace purevm
