#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "purevm/lower.hpp"
#include "purevm/transform.hpp"

using namespace purevm;

namespace {

const char* kStubs =
    "event reboot(x: Void) { x }\n"
    "event sleep(x: Void) { x }\n";

VmConfig base_cfg(const std::string& extra = "") {
    return parse_config("events = boot, reboot, sleep\n" + extra);
}

IrProgram compile(const std::string& body, const std::string& extra_cfg = "") {
    return compile_program(std::string(kStubs) + body, base_cfg(extra_cfg));
}

int count_op(const IrProgram& p, PrimOp op) {
    int n = 0;
    for (const auto& b : p.blocks)
        for (const auto& i : b.instrs)
            if (i.op == op) ++n;
    return n;
}

bool has_loop_edge(const IrProgram& p) {
    for (const auto& b : p.blocks)
        if (b.term.kind == TermKind::PushCont && b.term.loop_back) return true;
    return false;
}

}  // namespace

TEST_CASE("lowering: write-after-read program keeps the hazard shape") {
    IrProgram p = compile(
        "global var: Int\n"
        "global vec: Array<Int, 16>\n"
        "event boot(x: Void) {\n"
        "  i = var.postInc()\n"
        "  vec.setAt(i, 10)\n"
        "  x\n"
        "}\n");
    CHECK(count_op(p, PrimOp::PostInc) == 1);
    CHECK(count_op(p, PrimOp::SetAt) == 1);
    REQUIRE(p.arrays.size() == 1);
    CHECK(p.arrays[0].len == 16);
    CHECK(p.arrays[0].name == "vec");
    // postInc flows the old value into a fresh cell, not back onto var.
    for (const auto& b : p.blocks)
        for (const auto& i : b.instrs)
            if (i.op == PrimOp::PostInc) CHECK(i.result != i.flow);
}

TEST_CASE("lowering: in-place write primitives reuse the flow cell") {
    IrProgram p = compile(
        "global counter: Int = 5\n"
        "event boot(x: Void) {\n"
        "  counter.inc().toVoid()\n"
        "  x\n"
        "}\n");
    bool seen = false;
    for (const auto& b : p.blocks)
        for (const auto& i : b.instrs)
            if (i.op == PrimOp::Inc) {
                seen = true;
                CHECK(i.result == i.flow);
                CHECK(p.cells[i.flow].name == "counter");
            }
    CHECK(seen);
    // Initializer lands in the image at the cell address.
    Slot counter = kNoSlot;
    for (size_t s = 0; s < p.cells.size(); ++s)
        if (p.cells[s].name == "counter") counter = static_cast<Slot>(s);
    REQUIRE(counter != kNoSlot);
    CHECK(p.image[p.cells[counter].addr] == 5);
}

TEST_CASE("lowering: literals are pooled and never written") {
    IrProgram p = compile(
        "event boot(x: Void) {\n"
        "  a = 7.add(7)\n"
        "  b = 7.set(1)\n"
        "  a.add(b).toVoid()\n"
        "  x\n"
        "}\n");
    int sevens = 0;
    for (const auto& c : p.cells)
        if (c.literal && p.image[c.addr] == 7) ++sevens;
    CHECK(sevens == 1);
    // set on a literal goes through a staged copy.
    for (const auto& b : p.blocks)
        for (const auto& i : b.instrs)
            if (i.op == PrimOp::Set) CHECK_FALSE(p.cells[i.flow].literal);
}

TEST_CASE("lowering: self-recursion closes into a loop edge") {
    IrProgram p = compile(
        "global acc: Int\n"
        "func stop(n: Int) -> Int { n }\n"
        "func countdown(n: Int) -> Int {\n"
        "  acc.inc().toVoid()\n"
        "  m = n.sub(1)\n"
        "  k = m.gt(0).select(countdown, stop)\n"
        "  m.apply(k)\n"
        "}\n"
        "event boot(x: Void) {\n"
        "  5.countdown().toVoid()\n"
        "  x\n"
        "}\n");
    CHECK(has_loop_edge(p));
    // One specialization instance: the recursive call reuses the entry.
    std::set<std::string> labels;
    for (const auto& b : p.blocks) labels.insert(b.label);
    CHECK(labels.count("countdown") == 1);
    CHECK(labels.count("countdown#1") == 0);
}

TEST_CASE("lowering: non-tail recursion is rejected") {
    CHECK_THROWS_AS(compile("func loop(n: Int) -> Int {\n"
                            "  m = n.apply(loop)\n"
                            "  m.add(1)\n"
                            "}\n"
                            "event boot(x: Void) { 1.loop().toVoid()\n x }\n"),
                    LowerError);
}

TEST_CASE("lowering: ifElse branches become a conditional continuation") {
    IrProgram p = compile(
        "global alarm: Bool\n"
        "global ok: Bool\n"
        "func isHigh(t: Float) -> Bool { t.fgt(30.0) }\n"
        "func setAlarm(t: Float) -> Void { alarm.set(true).toVoid() }\n"
        "func setOk(t: Float) -> Void { ok.set(true).toVoid() }\n"
        "event boot(x: Void) {\n"
        "  25.5.ifElse(isHigh, setAlarm, setOk)\n"
        "  x\n"
        "}\n");
    int branches = 0;
    for (const auto& b : p.blocks)
        if (b.term.kind == TermKind::SelectCont) ++branches;
    CHECK(branches >= 1);
    CHECK(count_op(p, PrimOp::Select) == 0);  // arrow select is static
}

TEST_CASE("lowering: data select stays a runtime instruction") {
    IrProgram p = compile(
        "event boot(x: Void) {\n"
        "  v = true.select(3, 4)\n"
        "  v.toVoid()\n"
        "  x\n"
        "}\n");
    CHECK(count_op(p, PrimOp::Select) == 1);
}

TEST_CASE("lowering: len folds to a literal") {
    IrProgram p = compile(
        "global vec: Array<Int, 24>\n"
        "event boot(x: Void) {\n"
        "  vec.len().toVoid()\n"
        "  x\n"
        "}\n");
    CHECK(count_op(p, PrimOp::Len) == 0);
    bool found = false;
    for (const auto& c : p.cells)
        if (c.literal && p.image[c.addr] == 24) found = true;
    CHECK(found);
}

TEST_CASE("lowering: layout regions are page aligned and disjoint") {
    IrProgram p = compile(
        "global a: Int\nglobal b: Float = 1.5\nglobal vec: Array<Int, 40>\n"
        "event boot(x: Void) { x }\n",
        "page_size = 16\nnvm_size = 8192\n");
    const Layout& L = p.layout;
    CHECK(L.runtime_base == 0);
    CHECK(L.stack_base % 16 == 0);
    CHECK(L.queue_base % 16 == 0);
    CHECK(L.globals_base % 16 == 0);
    CHECK(L.undo_base % 16 == 0);
    CHECK(L.stack_base >= Layout::kRuntimeWords);
    CHECK(L.queue_base >= L.stack_base + L.stack_frames);
    CHECK(L.globals_base >= L.queue_base + 2 * 16);
    CHECK(L.undo_base >= L.globals_base + L.globals_words);
    CHECK(L.total_words <= 8192);
    CHECK(p.cells[kFlowSlot].addr == L.flow_addr());
    // Head and tail never share a page.
    CHECK(L.queue_head_addr() / 16 != L.queue_tail_addr() / 16);
}

TEST_CASE("lowering: too small a memory is a clear error") {
    CHECK_THROWS_AS(compile("global vec: Array<Int, 4096>\nevent boot(x: Void) { x }\n",
                            "nvm_size = 1024\npage_size = 32\n"),
                    LowerError);
}

TEST_CASE("lowering: every configured event needs a handler") {
    VmConfig c = base_cfg();
    c.events.push_back("tick");
    CHECK_THROWS_AS(compile_program(std::string(kStubs) + "event boot(x: Void) { x }\n", c),
                    LowerError);
}

TEST_CASE("lowering: undeclared configured event and unlisted program event") {
    CHECK_THROWS_AS(
        compile("event boot(x: Void) { x }\nevent extra(x: Void) { x }\n"),
        LowerError);
}

TEST_CASE("lowering: interrupts map to their target event") {
    VmConfig c = parse_config("events = boot, reboot, sleep, control\n");
    IrProgram p = compile_program(std::string(kStubs) +
                                      "event control(t: Float) { t.toVoid()\n }\n"
                                      "event boot(x: Void) { x }\n"
                                      "interrupt timer(t: Float) { t.addEventQ(control) }\n",
                                  c);
    REQUIRE(p.interrupts.size() == 1);
    CHECK(p.interrupts[0].first == "timer");
    CHECK(p.interrupts[0].second == 3);
    REQUIRE(p.handlers.size() == 4);
    CHECK(p.handlers[3].name == "control");
    CHECK(p.handlers[3].payload_tag == ValTag::Float);
}

TEST_CASE("fusion: fewer blocks, loops survive, still valid") {
    const std::string src =
        "global acc: Int\n"
        "func stop(n: Int) -> Int { n }\n"
        "func body(n: Int) -> Int { acc.set(acc.add(n)).toVoid()\n n.sub(1) }\n"
        "func countdown(n: Int) -> Int {\n"
        "  m = n.body()\n"
        "  k = m.gt(0).select(countdown, stop)\n"
        "  m.apply(k)\n"
        "}\n"
        "event boot(x: Void) { 6.countdown().toVoid()\n x }\n";
    VmConfig plain = base_cfg();
    VmConfig fused_cfg = base_cfg("optimize = BLOCK_FUSION\n");
    IrProgram a = compile_program(std::string(kStubs) + src, plain);
    IrProgram b = compile_program(std::string(kStubs) + src, fused_cfg);
    CHECK(b.blocks.size() < a.blocks.size());
    CHECK(has_loop_edge(a));
    CHECK(has_loop_edge(b));
    validate_ir(a);
    validate_ir(b);
}

TEST_CASE("compilation is deterministic") {
    const std::string src =
        "global vec: Array<Int, 8>\n"
        "event boot(x: Void) {\n"
        "  i = 3.add(4)\n"
        "  vec.setAt(i, 1)\n"
        "  x\n"
        "}\n";
    IrProgram a = compile(src);
    IrProgram b = compile(src);
    CHECK(render_ir(a) == render_ir(b));
    CHECK(a.image == b.image);
}
