#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <string>
#include <vector>

#include "purevm/lower.hpp"
#include "purevm/vm.hpp"

using namespace purevm;

namespace {

const char* kStubs =
    "event reboot(x: Void) { x.toVoid() }\n"
    "event sleep(x: Void) { x.toVoid() }\n";

VmConfig cfg_for(const std::string& events, const std::string& extra = "") {
    std::string text = "events = " + events + "\nnvm_size = 8192\n" + extra;
    return parse_config(text);
}

IrProgram compile(const std::string& src, const VmConfig& cfg) {
    return compile_program(src + "\n" + kStubs, cfg);
}

struct RunOut {
    RunReport rep;
    std::vector<std::uint32_t> globals;
    std::vector<std::uint32_t> trace;
};

RunOut run_prog(const IrProgram& p0, Backend b, const PowerModel& pm, const RunScript& rs,
                bool want_trace = false, std::uint64_t budget = 50000000) {
    IrProgram p = p0;
    p.config.backend = b;
    PowerDriver pd(pm);
    Engine e(p, pd, rs);
    e.collect_trace = want_trace;
    RunOut o;
    o.rep = e.run(budget);
    o.globals = e.globals_snapshot();
    o.trace = std::move(e.trace);
    return o;
}

PowerModel steps_at(std::vector<std::uint64_t> s) {
    PowerModel m;
    m.mode = PowerMode::Schedule;
    m.crash_steps = std::move(s);
    return m;
}

std::vector<std::int32_t> int_outputs(const RunReport& r) {
    std::vector<std::int32_t> v;
    for (const auto& o : r.outputs) v.push_back(static_cast<std::int32_t>(o.bits));
    return v;
}

bool cost_adds_up(const RunReport& r) {
    // Every micro step lands in exactly one overhead class.
    return r.split.total() == r.steps;
}

const char* kCounter =
    "global count: Int = 0\n"
    "global limit: Int = 8\n"
    "func done(x: Void) -> Void { x.toVoid() }\n"
    "func step(x: Void) -> Void {\n"
    "    c = count.postInc().toVoid()\n"
    "    k = count.lt(limit).select(step, done)\n"
    "    x.apply(k)\n"
    "}\n"
    "event boot(x: Void) { x.apply(step) }\n";

const char* kWar =
    "global vec: Array<Int, 16>\n"
    "global var: Int = 3\n"
    "event boot(x: Void) {\n"
    "    i = var.postInc()\n"
    "    v = vec.setAt(i, 10).toVoid()\n"
    "    y = var.emit().toVoid()\n"
    "    x.toVoid()\n"
    "}\n";

const char* kTally =
    "global total: Int = 0\n"
    "event boot(x: Void) { x.toVoid() }\n"
    "event tally(n: Int) {\n"
    "    t = total.set(total.add(n)).toVoid()\n"
    "    u = total.emit().toVoid()\n"
    "    t\n"
    "}\n"
    "interrupt fire(n: Int) { n.addEventQ(tally) }\n";

}  // namespace

TEST_CASE("vm: counter runs to completion on the test backend") {
    IrProgram p = compile(kCounter, cfg_for("boot, reboot, sleep"));
    RunOut o = run_prog(p, Backend::Test, PowerModel{}, RunScript{});
    CHECK(o.rep.halted);
    CHECK(o.rep.trap.empty());
    CHECK(o.rep.reboots == 0);
    REQUIRE_FALSE(o.globals.empty());
    CHECK(o.globals[0] == 8);  // count
    CHECK(o.rep.dispatched == 2);  // boot, sleep
    CHECK(cost_adds_up(o.rep));
}

TEST_CASE("vm: rewinding without crashes matches the test oracle") {
    IrProgram p = compile(kCounter, cfg_for("boot, reboot, sleep"));
    RunOut oracle = run_prog(p, Backend::Test, PowerModel{}, RunScript{});
    RunOut rew = run_prog(p, Backend::Rewinding, PowerModel{}, RunScript{});
    CHECK(rew.rep.halted);
    CHECK(rew.globals == oracle.globals);
    CHECK(rew.rep.outputs == oracle.rep.outputs);
    CHECK(rew.rep.rollbacks == 0);
    CHECK(cost_adds_up(rew.rep));
}

TEST_CASE("vm: write-after-read survives a crash sweep") {
    IrProgram p = compile(kWar, cfg_for("boot, reboot, sleep"));
    RunOut oracle = run_prog(p, Backend::Test, PowerModel{}, RunScript{});
    REQUIRE(int_outputs(oracle.rep) == std::vector<std::int32_t>{4});

    std::uint64_t b0 = run_prog(p, Backend::Rewinding, PowerModel{}, RunScript{}).rep.steps;
    REQUIRE(b0 > 100);
    int crashed_runs = 0;
    for (std::uint64_t k = 1; k <= b0; k += 7) {
        RunOut o = run_prog(p, Backend::Rewinding, steps_at({k}), RunScript{});
        REQUIRE_MESSAGE(o.rep.trap.empty(), "crash at ", k, ": ", o.rep.trap);
        REQUIRE_MESSAGE(o.rep.halted, "crash at ", k);
        REQUIRE_MESSAGE(o.globals == oracle.globals, "globals diverge at crash step ", k);
        REQUIRE_MESSAGE(o.rep.outputs == oracle.rep.outputs, "outputs diverge at crash step ", k);
        if (o.rep.reboots > 0) crashed_runs++;
        REQUIRE(cost_adds_up(o.rep));
    }
    CHECK(crashed_runs > 10);
}

TEST_CASE("vm: a crash mid transaction rolls dirty pages back") {
    IrProgram p = compile(kCounter, cfg_for("boot, reboot, sleep"));
    // Crash twice early, then let it finish.
    RunOut o = run_prog(p, Backend::Rewinding, steps_at({120, 260}), RunScript{});
    CHECK(o.rep.halted);
    CHECK(o.rep.reboots == 2);
    CHECK(o.rep.rollbacks > 0);
    CHECK(o.globals[0] == 8);
}

TEST_CASE("vm: interrupts are delivered and handled exactly once across crashes") {
    IrProgram p = compile(kTally, cfg_for("boot, reboot, sleep, tally"));
    RunScript rs;
    rs.events.push_back({40, "fire", 5});
    rs.events.push_back({90, "fire", 7});
    rs.events.push_back({140, "fire", 11});

    RunOut oracle = run_prog(p, Backend::Test, PowerModel{}, rs);
    REQUIRE(int_outputs(oracle.rep) == std::vector<std::int32_t>{5, 12, 23});
    REQUIRE(oracle.globals[0] == 23);

    std::uint64_t b0 = run_prog(p, Backend::Rewinding, PowerModel{}, rs).rep.steps;
    for (std::uint64_t k = 1; k <= b0; k += 5) {
        RunOut o = run_prog(p, Backend::Rewinding, steps_at({k}), rs);
        REQUIRE_MESSAGE(o.rep.trap.empty(), "crash at ", k, ": ", o.rep.trap);
        REQUIRE_MESSAGE(o.rep.outputs == oracle.rep.outputs, "outputs diverge at crash step ", k);
        REQUIRE_MESSAGE(o.globals == oracle.globals, "globals diverge at crash step ", k);
    }
}

TEST_CASE("vm: multiple crashes in one run still converge") {
    IrProgram p = compile(kTally, cfg_for("boot, reboot, sleep, tally"));
    RunScript rs;
    rs.events.push_back({30, "fire", 2});
    rs.events.push_back({60, "fire", 3});
    RunOut oracle = run_prog(p, Backend::Test, PowerModel{}, rs);
    RunOut o = run_prog(p, Backend::Rewinding, steps_at({50, 200, 350, 500, 650}), rs);
    CHECK(o.rep.halted);
    CHECK(o.rep.outputs == oracle.rep.outputs);
    CHECK(o.globals == oracle.globals);
    CHECK(o.rep.reboots == 5);
}

TEST_CASE("vm: a full queue makes the interrupt retry, not drop") {
    IrProgram p = compile(kTally, cfg_for("boot, reboot, sleep, tally", "queue_capacity = 2\n"));
    RunScript rs;
    for (int i = 0; i < 5; i++) rs.events.push_back({10, "fire", static_cast<std::uint32_t>(i)});
    RunOut o = run_prog(p, Backend::Rewinding, PowerModel{}, rs);
    CHECK(o.rep.halted);
    CHECK(int_outputs(o.rep) == std::vector<std::int32_t>{0, 1, 3, 6, 10});
    CHECK(o.rep.dropped == 0);
}

TEST_CASE("vm: loop batching commits fewer transactions but the same state") {
    VmConfig plain = cfg_for("boot, reboot, sleep");
    VmConfig batched = cfg_for("boot, reboot, sleep",
                               "optimize = LOOP_OPT\nloop_unroll = 4\n");
    IrProgram p1 = compile(kCounter, plain);
    IrProgram p2 = compile(kCounter, batched);
    RunOut plain_run = run_prog(p1, Backend::Rewinding, PowerModel{}, RunScript{});
    RunOut batch_run = run_prog(p2, Backend::Rewinding, PowerModel{}, RunScript{});
    CHECK(batch_run.rep.halted);
    CHECK(batch_run.globals == plain_run.globals);
    CHECK(batch_run.rep.outputs == plain_run.rep.outputs);
    CHECK(batch_run.rep.txns < plain_run.rep.txns);

    // Batched loops survive crashes too.
    RunOut oracle = run_prog(p2, Backend::Test, PowerModel{}, RunScript{});
    std::uint64_t b0 = batch_run.rep.steps;
    for (std::uint64_t k = 1; k <= b0; k += 11) {
        RunOut o = run_prog(p2, Backend::Rewinding, steps_at({k}), RunScript{});
        REQUIRE_MESSAGE(o.rep.halted, "crash at ", k, ": ", o.rep.trap);
        REQUIRE_MESSAGE(o.globals == oracle.globals, "globals diverge at crash step ", k);
    }
}

TEST_CASE("vm: just-in-time checkpoints resume without re-execution") {
    IrProgram p = compile(kCounter, cfg_for("boot, reboot, sleep"));
    RunOut oracle = run_prog(p, Backend::Test, PowerModel{}, RunScript{}, true);

    PowerModel energy;
    energy.mode = PowerMode::Energy;
    energy.capacity = 330;
    energy.threshold_off = 30;
    RunOut jit = run_prog(p, Backend::JustInTime, energy, RunScript{}, true);
    CHECK(jit.rep.halted);
    CHECK(jit.rep.trap.empty());
    CHECK(jit.rep.reboots > 0);
    CHECK(jit.rep.checkpoints > 0);
    CHECK(jit.globals == oracle.globals);
    CHECK(jit.rep.outputs == oracle.rep.outputs);
    // The reboot handler has no instructions, so the instruction trace
    // must be exactly the continuous one: nothing runs twice.
    CHECK(jit.trace == oracle.trace);
    CHECK(cost_adds_up(jit.rep));
}

TEST_CASE("vm: just-in-time on continuous power matches the oracle") {
    IrProgram p = compile(kWar, cfg_for("boot, reboot, sleep"));
    RunOut oracle = run_prog(p, Backend::Test, PowerModel{}, RunScript{}, true);
    RunOut jit = run_prog(p, Backend::JustInTime, PowerModel{}, RunScript{}, true);
    CHECK(jit.rep.halted);
    CHECK(jit.rep.checkpoints == 0);
    CHECK(jit.trace == oracle.trace);
    CHECK(jit.globals == oracle.globals);
}

TEST_CASE("vm: backend and power mode mismatches are rejected") {
    IrProgram p = compile(kCounter, cfg_for("boot, reboot, sleep"));
    {
        IrProgram q = p;
        q.config.backend = Backend::Test;
        PowerDriver pd(steps_at({100}));
        CHECK_THROWS_AS(Engine(q, pd, RunScript{}), ConfigError);
    }
    {
        IrProgram q = p;
        q.config.backend = Backend::JustInTime;
        PowerDriver pd(steps_at({100}));
        CHECK_THROWS_AS(Engine(q, pd, RunScript{}), ConfigError);
    }
    {
        IrProgram q = p;
        q.config.backend = Backend::JustInTime;
        PowerModel thin;
        thin.mode = PowerMode::Energy;
        thin.capacity = 150;
        thin.threshold_off = 20;
        PowerDriver pd(thin);
        CHECK_THROWS_AS(Engine(q, pd, RunScript{}), ConfigError);
    }
}

TEST_CASE("vm: division by zero traps cleanly") {
    IrProgram p = compile(
        "global z: Int = 0\n"
        "event boot(x: Void) {\n"
        "    q = 7.div(z).toVoid()\n"
        "    x.toVoid()\n"
        "}\n",
        cfg_for("boot, reboot, sleep"));
    RunOut o = run_prog(p, Backend::Test, PowerModel{}, RunScript{});
    CHECK_FALSE(o.rep.halted);
    CHECK(o.rep.trap == "trap: division by zero");
}

TEST_CASE("vm: array index out of range traps cleanly") {
    IrProgram p = compile(
        "global vec: Array<Int, 4>\n"
        "global i: Int = 9\n"
        "event boot(x: Void) {\n"
        "    v = vec.getAt(i).toVoid()\n"
        "    x.toVoid()\n"
        "}\n",
        cfg_for("boot, reboot, sleep"));
    RunOut o = run_prog(p, Backend::Rewinding, PowerModel{}, RunScript{});
    CHECK_FALSE(o.rep.halted);
    CHECK(o.rep.trap == "trap: array index out of range");
}

TEST_CASE("vm: step budget exhaustion is reported") {
    IrProgram p = compile(kCounter, cfg_for("boot, reboot, sleep"));
    RunOut o = run_prog(p, Backend::Test, PowerModel{}, RunScript{}, false, 50);
    CHECK_FALSE(o.rep.halted);
    CHECK(o.rep.trap == "limit: step budget exceeded");
}

TEST_CASE("vm: temperature stream advances across re-reads") {
    IrProgram p = compile(
        "global t0: Float = 0.0\n"
        "global t1: Float = 0.0\n"
        "event boot(x: Void) {\n"
        "    a = t0.set(t0.getTemp()).toVoid()\n"
        "    b = t1.set(t1.getTemp()).toVoid()\n"
        "    x.toVoid()\n"
        "}\n",
        cfg_for("boot, reboot, sleep"));
    RunScript rs;
    rs.temps = {21.5f, 30.25f, 18.0f};
    RunOut o = run_prog(p, Backend::Test, PowerModel{}, rs);
    CHECK(o.rep.halted);
    float v0, v1;
    std::memcpy(&v0, &o.globals[0], 4);
    std::memcpy(&v1, &o.globals[1], 4);
    CHECK(v0 == 21.5f);
    CHECK(v1 == 30.25f);
}

TEST_CASE("vm: commands reach the wire even when their transaction rolls back") {
    IrProgram p = compile(
        "event boot(x: Void) {\n"
        "    c = 42.sendCmd().toVoid()\n"
        "    x.toVoid()\n"
        "}\n",
        cfg_for("boot, reboot, sleep"));
    RunOut oracle = run_prog(p, Backend::Rewinding, PowerModel{}, RunScript{});
    REQUIRE(oracle.rep.raw_io.size() == 1);
    REQUIRE(oracle.rep.outputs.size() == 1);

    // Sweep; committed outputs stay exactly once, raw wire traffic may
    // repeat when the enclosing transaction is rolled back.
    std::uint64_t b0 = oracle.rep.steps;
    bool saw_duplicate_io = false;
    for (std::uint64_t k = 1; k <= b0; k += 3) {
        RunOut o = run_prog(p, Backend::Rewinding, steps_at({k}), RunScript{});
        REQUIRE(o.rep.halted);
        REQUIRE(o.rep.outputs == oracle.rep.outputs);
        REQUIRE(o.rep.raw_io.size() >= 1);
        if (o.rep.raw_io.size() > 1) saw_duplicate_io = true;
    }
    CHECK(saw_duplicate_io);
}

TEST_CASE("vm: commit hook sees committed state only") {
    IrProgram p = compile(kCounter, cfg_for("boot, reboot, sleep"));
    IrProgram q = p;
    q.config.backend = Backend::Rewinding;
    PowerDriver pd(steps_at({150, 400}));
    Engine e(q, pd, RunScript{});
    std::vector<std::uint32_t> seen;
    e.on_commit = [&](const Engine& eng) { seen.push_back(eng.global_bits("count")); };
    RunReport r = e.run();
    CHECK(r.halted);
    // Monotone: committed counter values never go backwards.
    for (std::size_t i = 1; i < seen.size(); i++) CHECK(seen[i] >= seen[i - 1]);
    CHECK(seen.back() == 8);
}
