#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "purevm/fuzz.hpp"
#include "purevm/script.hpp"
#include "purevm/vm.hpp"

namespace purevm {

// Seed for the host-side input generator. Every benchmark stimulus is
// derived from this one constant, so runs are reproducible everywhere.
inline constexpr std::uint64_t kBenchInputSeed = 0x243F6A8885A308D3ull;

// A self-contained workload: surface program, machine config, stimulus
// script and the reference outputs computed by a host-side mirror of the
// algorithm.
struct BenchProgram {
    std::string name;
    std::string source;
    std::string config;  // page size and optimization lines left out
    RunScript script;
    std::vector<OutputRecord> expected;
    // False when sensor re-reads after a crash may legitimately change the
    // outputs; such programs are checked through `invariant` instead.
    bool compare_state = true;
    std::function<bool(const Engine&)> invariant;
    std::string invariant_name;
};

// Full-size workloads: bit counting (7 methods x 100 inputs), a cuckoo
// filter (100 inserts + 100 membership queries), activity recognition
// (2 x 128 training samples, sliding window of 3) and the sensing app.
std::vector<BenchProgram> benchmark_suite();

// Reduced variants of the same programs plus two hazard micro-benchmarks,
// sized so an exhaustive single-crash sweep stays cheap.
std::vector<BenchProgram> fuzz_suite();

struct BenchOutcome {
    std::string name;
    std::string backend;
    std::string opt;  // none | fusion | fusion+loop
    bool ok = false;
    std::string detail;  // first mismatch when not ok
    RunReport rep;
};

// Compiles with extra config lines appended, runs on the given supply and
// compares committed outputs with the reference. Intermittent supplies
// still must match for programs that do not re-read sensors.
BenchOutcome run_bench(const BenchProgram& b, const std::string& extra_cfg = "",
                       const PowerModel& pm = {});

struct OptRow {
    std::string label;
    std::uint64_t txns = 0;
    std::uint64_t page_copies = 0;
    std::uint64_t stack_steps = 0;
    std::uint64_t steps = 0;
    bool outputs_match = false;
};

struct OptReport {
    std::string name;
    std::vector<OptRow> rows;  // none, fusion, fusion + loop batching
    bool ok = false;
    std::string detail;
};

// Runs the workload under no optimization, block fusion, and block fusion
// plus loop batching. Outputs must be identical; commits and logged pages
// must not increase left to right.
OptReport compare_optimizations(const BenchProgram& b);

struct PageRow {
    std::uint32_t page_size = 0;
    RunReport rep;
};

struct PageReport {
    std::string name;
    std::vector<PageRow> rows;
    bool ok = false;
    std::string detail;
};

// Same workload under several page sizes; outputs must be identical.
PageReport compare_page_sizes(const BenchProgram& b, const std::vector<std::uint32_t>& sizes);

std::string render_bench_table(const std::vector<BenchOutcome>& rows);
std::string render_opt_report(const OptReport& r);
std::string render_page_report(const PageReport& r);

}  // namespace purevm
