#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "purevm/ir.hpp"
#include "purevm/script.hpp"
#include "purevm/vm.hpp"

namespace purevm {

struct FuzzOptions {
    // Max single-crash points; the sweep is exhaustive when the baseline
    // run is shorter, stride-sampled otherwise.
    std::uint64_t budget = 100000;
    std::uint64_t seed = 1;
    std::uint32_t multi_rounds = 100;
    std::uint32_t multi_crashes = 4;
    std::uint32_t jit_rounds = 200;
    std::uint64_t run_budget = 50000000;
    // Worker threads; 0 means one per logical CPU. Results are identical
    // for every job count, so the fan-out only changes wall time. The
    // invariant callback must be safe to call from several threads.
    std::uint32_t jobs = 1;
    // Compare committed outputs and final globals against the oracle.
    // Disable for programs whose sensor re-reads legitimately diverge.
    bool compare_state = true;
    // Checked at every commit of every run; a false result is a failure.
    std::function<bool(const Engine&)> invariant;
    std::string invariant_name;
};

struct FuzzReport {
    std::uint64_t oracle_steps = 0;
    std::uint64_t base_steps = 0;  // continuous run of the backend under test
    std::uint64_t single_tried = 0;
    std::uint64_t multi_tried = 0;
    std::uint64_t jit_tried = 0;
    std::uint64_t crashes_seen = 0;
    std::uint64_t checkpoints_seen = 0;
    std::uint64_t failures = 0;
    bool exhaustive = false;
    std::vector<std::string> notes;  // first few failure descriptions
    bool ok() const { return failures == 0; }
};

// Single-crash sweep plus random multi-crash schedules on the rewinding
// backend, comparing every run against the continuously powered oracle.
FuzzReport crash_fuzz(const IrProgram& prog, const RunScript& script, const FuzzOptions& opt);

// Random energy traces on the just-in-time backend. Verifies state against
// the oracle and, when the reboot handler contributes no instructions,
// exact instruction-trace equality: nothing ever runs twice.
FuzzReport jit_fuzz(const IrProgram& prog, const RunScript& script, const FuzzOptions& opt);

std::string render_fuzz_report(const FuzzReport& r);

}  // namespace purevm
