#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "purevm/ir.hpp"
#include "purevm/nvm.hpp"
#include "purevm/power.hpp"
#include "purevm/script.hpp"

namespace purevm {

struct OutputRecord {
    ValTag tag = ValTag::Unknown;
    std::uint32_t bits = 0;
    bool io = false;
    bool operator==(const OutputRecord&) const = default;
};

// Where the micro steps went. The four counters sum to the run's total
// step count: every charged access lands in exactly one class.
struct OverheadSplit {
    std::uint64_t useful = 0;          // program instructions
    std::uint64_t undo = 0;            // page search, logging and rollback
    std::uint64_t stack = 0;           // continuation frames and results
    std::uint64_t consume_commit = 0;  // queue traffic, sequence and commit words
    std::uint64_t total() const { return useful + undo + stack + consume_commit; }
};

struct RunReport {
    std::uint64_t steps = 0;
    std::uint64_t word_reads = 0;
    std::uint64_t word_writes = 0;
    std::uint64_t prim_execs = 0;
    std::uint64_t io_execs = 0;
    std::uint64_t page_copies = 0;
    std::uint64_t txns = 0;
    std::uint64_t rollbacks = 0;
    std::uint64_t reboots = 0;
    std::uint64_t checkpoints = 0;
    std::uint64_t enqueued = 0;
    std::uint64_t dispatched = 0;
    std::uint64_t dropped = 0;
    OverheadSplit split;
    bool halted = false;
    std::string trap;  // empty on a clean run
    // Committed outputs, exactly once per committed transaction.
    std::vector<OutputRecord> outputs;
    // I/O as physically performed, including work later rolled back.
    std::vector<OutputRecord> raw_io;
};

// Executes a compiled program against a power supply. The three backends
// share one instruction set and differ in crash handling:
//  - Rewinding runs each dispatch step as a transaction with an undo log;
//  - JustInTime writes straight through and saves a resume cursor when the
//    supply signals low energy;
//  - Test is the continuously powered reference.
class Engine {
  public:
    Engine(const IrProgram& prog, PowerDriver& power, RunScript script);

    RunReport run(std::uint64_t max_steps = 200000000);

    // Called after every committed transaction, for invariant checks.
    std::function<void(const Engine&)> on_commit;
    // Records (block << 16) | ip for every executed instruction.
    bool collect_trace = false;
    std::vector<std::uint32_t> trace;
    // When set, every charged micro step writes one line here: step
    // index, operation, and the page a write lands on.
    std::ostream* trace_out = nullptr;

    std::uint32_t cell_bits(Slot s) const;
    std::uint32_t global_bits(const std::string& name) const;
    // Declared globals and array contents, for cross-backend comparison.
    std::vector<std::uint32_t> globals_snapshot() const;
    const Memory& memory() const { return mem_; }
    const IrProgram& program() const { return prog_; }

  private:
    enum Bucket { BUseful, BUndo, BStack, BDispatch };

    const IrProgram& prog_;
    PowerDriver& power_;
    RunScript script_;
    Memory mem_;
    const Layout& L_;
    Backend backend_;
    bool loop_opt_ = false;
    std::uint32_t unroll_ = 1;
    std::uint32_t cap_ = 0;
    int boot_id_ = -1, reboot_id_ = -1, sleep_id_ = -1;

    RunReport rep_;
    std::uint64_t max_steps_ = 0;
    bool booted_ = false;
    bool need_reboot_ = false;
    std::uint64_t reboots_since_commit_ = 0;

    // transaction state (volatile, dies with power)
    bool tx_active_ = false;
    std::vector<std::uint32_t> tx_pages_;
    std::vector<OutputRecord> tx_out_;
    bool in_batch_ = false;
    std::uint32_t iters_ = 0;

    bool in_isr_ = false;
    std::size_t next_script_ = 0;
    std::size_t temp_idx_ = 0;

    // just-in-time checkpoint cursor
    int ckpt_next_ = 0;
    std::uint16_t ckpt_seq_ = 0;
    bool resume_valid_ = false;
    std::uint16_t resume_block_ = 0;
    std::uint16_t resume_ip_ = 0;

    void tick(std::uint32_t cost, Bucket b);
    Word rd(Addr a, Bucket b);
    void wr_raw(Addr a, Word v, Bucket b);
    void wr(Addr a, Word v, Bucket b);
    std::uint32_t rd_cell(Slot s, Bucket b);
    void wr_cell(Slot s, std::uint32_t v, Bucket b);
    void wr_cell_raw(Slot s, std::uint32_t v, Bucket b);

    void log_page(std::uint32_t page);
    void undo_restore();
    void tx_begin();
    void tx_commit(std::uint32_t vsp);
    void tx_abort();

    void jit_checkpoint(std::uint16_t block, std::uint16_t ip);
    void jit_restore();
    void jit_boundary(std::uint16_t block, std::uint16_t ip);

    void pump_script();
    bool try_enqueue(std::uint16_t ev, std::uint32_t payload);
    bool consume_event();
    bool step_dispatch();
    void do_reboot();
    float next_temp();
    void out(ValTag tag, std::uint32_t bits, bool io);
    void exec_ins(const CallIns& ins, BlockId block, std::uint16_t ip);
    [[noreturn]] void trap(const std::string& msg);
};

// Flat key-value text block, one counter per line.
std::string render_run_report(const RunReport& r);

}  // namespace purevm
