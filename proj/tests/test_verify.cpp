#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "purevm/bench.hpp"
#include "purevm/config.hpp"
#include "purevm/fuzz.hpp"
#include "purevm/lower.hpp"

using namespace purevm;

namespace {

const BenchProgram& corpus(const std::string& name) {
    static std::vector<BenchProgram> suite = fuzz_suite();
    for (const auto& b : suite)
        if (b.name == name) return b;
    throw std::runtime_error("no such corpus program: " + name);
}

IrProgram compiled(const BenchProgram& b) {
    return compile_program(b.source, parse_config(b.config));
}

FuzzOptions options_for(const BenchProgram& b) {
    FuzzOptions opt;
    opt.compare_state = b.compare_state;
    opt.invariant = b.invariant;
    opt.invariant_name = b.invariant_name;
    return opt;
}

}  // namespace

TEST_CASE("bench oracles agree on continuous power") {
    for (const auto& b : fuzz_suite()) {
        BenchOutcome o = run_bench(b);
        INFO(b.name, ": ", o.detail);
        CHECK(o.ok);
    }
}

TEST_CASE("full size workloads match their references") {
    for (const auto& b : benchmark_suite()) {
        BenchOutcome o = run_bench(b);
        INFO(b.name, ": ", o.detail);
        CHECK(o.ok);
        CHECK(o.rep.halted);
    }
}

TEST_CASE("exhaustive crash sweep on the hazard counter") {
    const BenchProgram& b = corpus("war-counter");
    FuzzReport r = crash_fuzz(compiled(b), b.script, options_for(b));
    CHECK(r.ok());
    CHECK(r.exhaustive);
    CHECK(r.single_tried == r.base_steps);
    CHECK(r.crashes_seen > r.single_tried);  // multi-crash rounds add more
}

TEST_CASE("flag pair invariant holds under varying sensor input") {
    const BenchProgram& b = corpus("alarm-flags-varying");
    REQUIRE(bool(b.invariant));
    FuzzReport r = crash_fuzz(compiled(b), b.script, options_for(b));
    CHECK(r.ok());
    CHECK(r.exhaustive);
}

TEST_CASE("a violated invariant is reported, not swallowed") {
    const BenchProgram& b = corpus("alarm-flags-varying");
    FuzzOptions opt = options_for(b);
    // The varying temperature stream sets the alarm on every other check,
    // so this pseudo invariant must trip.
    opt.invariant = [](const Engine& e) { return e.global_bits("alarm") == 0; };
    opt.invariant_name = "alarm stays clear";
    FuzzReport r = crash_fuzz(compiled(b), b.script, opt);
    CHECK(r.failures > 0);
    REQUIRE(!r.notes.empty());
    CHECK(r.notes[0].find("alarm stays clear") != std::string::npos);
}

TEST_CASE("multi cell update never observed half done") {
    const char* src =
        "global a: Int = 0\n"
        "global b: Int = 0\n"
        "global c: Int = 0\n"
        "event boot(x: Void) { x.toVoid() }\n"
        "event mix(k: Int) {\n"
        "    p = a.set(k).toVoid()\n"
        "    q = b.set(k.mul(2)).toVoid()\n"
        "    r = c.set(k.mul(3)).toVoid()\n"
        "    e = a.add(b).add(c).emit().toVoid()\n"
        "    k.toVoid()\n"
        "}\n"
        "event reboot(x: Void) { x.toVoid() }\n"
        "event sleep(x: Void) { x.toVoid() }\n"
        "interrupt mixIsr(k: Int) { k.addEventQ(mix) }\n";
    IrProgram prog = compile_program(src, parse_config("events = boot, reboot, sleep, mix\n"));
    RunScript sc;
    for (int i = 0; i < 5; ++i) sc.events.push_back({1 + 40u * i, "mixIsr", 7u + i});
    FuzzOptions opt;
    opt.invariant = [](const Engine& e) {
        std::uint32_t a = e.global_bits("a");
        return e.global_bits("b") == 2 * a && e.global_bits("c") == 3 * a;
    };
    opt.invariant_name = "a,b,c move together";
    FuzzReport r = crash_fuzz(prog, sc, opt);
    INFO(render_fuzz_report(r));
    CHECK(r.ok());
    CHECK(r.exhaustive);
}

TEST_CASE("just in time backend replays nothing on the corpus") {
    for (const char* name : {"war-counter", "alarm-flags", "activity-small"}) {
        const BenchProgram& b = corpus(name);
        FuzzOptions opt = options_for(b);
        opt.jit_rounds = 120;
        FuzzReport r = jit_fuzz(compiled(b), b.script, opt);
        INFO(name, ": ", render_fuzz_report(r));
        CHECK(r.ok());
        CHECK(r.crashes_seen > 0);
        CHECK(r.checkpoints_seen > 0);
        for (const auto& n : r.notes) CHECK(n.find("skipped") == std::string::npos);
    }
}

TEST_CASE("optimizations preserve outputs and reduce bookkeeping") {
    OptReport r = compare_optimizations(corpus("bitcount-small"));
    INFO(render_opt_report(r));
    REQUIRE(r.ok);
    REQUIRE(r.rows.size() == 3);
    // Loop batching must at least halve the page copy traffic here.
    CHECK(r.rows[2].page_copies * 2 <= r.rows[0].page_copies);
}

TEST_CASE("page size does not change behaviour") {
    PageReport r = compare_page_sizes(corpus("cuckoo-filter-small"), {16, 32, 64, 128});
    INFO(render_page_report(r));
    CHECK(r.ok);
    REQUIRE(r.rows.size() == 4);
}

TEST_CASE("fuzzing is deterministic for a fixed seed") {
    const BenchProgram& b = corpus("war-counter");
    IrProgram prog = compiled(b);
    FuzzOptions opt = options_for(b);
    opt.seed = 99;
    FuzzReport r1 = crash_fuzz(prog, b.script, opt);
    FuzzReport r2 = crash_fuzz(prog, b.script, opt);
    CHECK(r1.crashes_seen == r2.crashes_seen);
    CHECK(r1.single_tried == r2.single_tried);
    CHECK(r1.multi_tried == r2.multi_tried);
    CHECK(r1.failures == r2.failures);
    CHECK(render_fuzz_report(r1) == render_fuzz_report(r2));
}

#include "purevm/cir.hpp"
#include "purevm/power.hpp"

TEST_CASE("compiled image container round trips exactly") {
    const BenchProgram& b = corpus("cuckoo-filter-small");
    IrProgram p1 = compiled(b);
    std::string bytes = encode_cir(p1);
    IrProgram p2 = decode_cir(bytes);
    CHECK(encode_cir(p2) == bytes);
    CHECK(render_ir(p2) == render_ir(p1));
    // The decoded image must run identically.
    PowerDriver d1{PowerModel{}}, d2{PowerModel{}};
    Engine e1(p1, d1, b.script), e2(p2, d2, b.script);
    RunReport r1 = e1.run(), r2 = e2.run();
    CHECK(r1.steps == r2.steps);
    CHECK(r1.outputs == r2.outputs);
    CHECK(e1.globals_snapshot() == e2.globals_snapshot());
}

TEST_CASE("corrupt compiled images are rejected") {
    IrProgram p = compiled(corpus("war-counter"));
    std::string bytes = encode_cir(p);
    CHECK_THROWS_AS(decode_cir(bytes.substr(0, bytes.size() / 2)), CirError);
    CHECK_THROWS_AS(decode_cir(std::string("NOPE") + bytes.substr(4)), CirError);
    std::string extra = bytes + "x";
    CHECK_THROWS_AS(decode_cir(extra), CirError);
}
