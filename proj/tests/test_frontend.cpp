#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <random>

#include "purevm/config.hpp"
#include "purevm/infer.hpp"
#include "purevm/lexer.hpp"
#include "purevm/parser.hpp"

using namespace purevm;

namespace {

SourceProgram parse_ok(const std::string& src) {
    SourceProgram p = parse_program(src);
    return p;
}

}  // namespace

TEST_CASE("lexer: int float and chain heads") {
    auto toks = lex("42 -7 0xFF 3.5 1.sendCmd()");
    REQUIRE(toks.size() >= 8);
    CHECK(toks[0].kind == Tok::Int);
    CHECK(toks[0].int_value == 42);
    CHECK(toks[1].int_value == -7);
    CHECK(toks[2].int_value == 255);
    CHECK(toks[3].kind == Tok::Float);
    CHECK(toks[3].float_value == doctest::Approx(3.5));
    // "1.sendCmd" must lex as int, dot, ident, not a float literal.
    CHECK(toks[4].kind == Tok::Int);
    CHECK(toks[5].kind == Tok::Dot);
    CHECK(toks[6].kind == Tok::Ident);
}

TEST_CASE("lexer: positions and comments") {
    auto toks = lex("# comment\nfunc f\n");
    CHECK(toks[0].kind == Tok::Newline);
    CHECK(toks[1].kind == Tok::KwFunc);
    CHECK(toks[1].span.begin.line == 2);
    CHECK(toks[1].span.begin.col == 1);
}

TEST_CASE("lexer: out-of-range literal is a positioned error") {
    CHECK_THROWS_AS(lex("9999999999999999999999"), SyntaxError);
    try {
        lex("\n  4294967296");
    } catch (const SyntaxError& e) {
        CHECK(e.where().line == 2);
        CHECK(e.where().col == 3);
    }
}

TEST_CASE("parser: declaration forms") {
    auto p = parse_ok(R"(
primitive select(b: Bool)(t: %a, f: %a) -> %a [builtin]
global vec: Array<Int, 128>
global limit: Float = 25.0

func double(x: Int) -> Int { x.add(x) }

event boot(x: Void) { x }

interrupt timer(t: Float) { t.addEventQ(control) }
)");
    REQUIRE(p.decls.size() == 6);
    CHECK(p.decls[0].kind == DeclKind::Primitive);
    CHECK(p.decls[0].meta.builtin);
    CHECK(p.decls[1].global_type->length == 128);
    CHECK(p.decls[2].global_init->float_value == doctest::Approx(25.0));
    CHECK(p.decls[3].kind == DeclKind::Func);
    CHECK(p.decls[4].kind == DeclKind::Event);
    CHECK(p.decls[5].kind == DeclKind::Interrupt);
}

TEST_CASE("parser: chains, bindings, nested args, multi-line chains") {
    auto p = parse_ok(
        "func f(p: Int)(q: Int) -> Int {\n"
        "  i = p.add(q.mul(2), 3)\n"
        "  i.sub(1)\n"
        "   .add(0)\n"
        "}\n");
    REQUIRE(p.decls.size() == 1);
    const auto& body = p.decls[0].body;
    REQUIRE(body.size() == 2);
    CHECK(*body[0].binding == "i");
    REQUIRE(body[0].value->kind == ExprKind::Chain);
    CHECK(body[0].value->calls[0].args.size() == 2);
    CHECK(body[0].value->calls[0].args[0]->kind == ExprKind::Chain);
    CHECK(body[1].value->calls.size() == 2);
}

TEST_CASE("parser: metadata tags") {
    auto p = parse_ok("primitive getTemp(x: Float)() -> Float [builtin] [IO] [write x]\n");
    CHECK(p.decls[0].meta.builtin);
    CHECK(p.decls[0].meta.io);
    REQUIRE(p.decls[0].meta.writes.size() == 1);
    CHECK(p.decls[0].meta.writes[0] == "x");
}

TEST_CASE("parser: errors carry positions") {
    try {
        parse_program("func f(x: Int) -> Int {\n  x.add(\n}\n");
        FAIL("expected syntax error");
    } catch (const SyntaxError& e) {
        CHECK(e.where().line >= 2);
    }
    CHECK_THROWS_AS(parse_program("func f() -> Int { 1 }"), SyntaxError);
    CHECK_THROWS_AS(parse_program("event e(x: Void)(y: Int) { x }"), SyntaxError);
    CHECK_THROWS_AS(parse_program("global g Int"), SyntaxError);
}

TEST_CASE("parser: random input never aborts") {
    std::mt19937 rng(7);
    const std::string alphabet = "abz(){}[]<>.,:;=%->#\n 0123456789\"\\";
    for (int round = 0; round < 500; ++round) {
        std::string s;
        int n = static_cast<int>(rng() % 60);
        for (int i = 0; i < n; ++i) s.push_back(alphabet[rng() % alphabet.size()]);
        try {
            parse_program(s);
        } catch (const SyntaxError& e) {
            CHECK(e.where().line >= 1);
        }
    }
}

TEST_CASE("render/parse round trip") {
    const char* sources[] = {
        "primitive select(b: Bool)(t: %a, f: %a) -> %a [builtin]\n",
        "func ifElse(p)(s, t, f) {\n  func = p.apply(s).select(t, f)\n  p.apply(func)\n}\n",
        "global vec: Array<Int, 16>\n\nglobal limit: Float = 25.0\n",
        "event control(t: Float) {\n  t.ifElse(tooCold, heaterOn, heaterOff)\n}\n",
        "func f(x: Int) -> Int {\n  y = x.add(-3)\n  y.mul(0xFF).sub(x)\n}\n",
        "interrupt timer(t: Float) {\n  t.addEventQ(control)\n}\n",
    };
    for (const char* src : sources) {
        CAPTURE(src);
        SourceProgram a = parse_ok(src);
        SourceProgram b = parse_ok(render_program(a));
        CHECK(program_equal(a, b));
        // Rendering is a fixed point.
        CHECK(render_program(a) == render_program(b));
    }
}

TEST_CASE("config: defaults and parsing") {
    VmConfig c = parse_config(
        "# app config\n"
        "events = boot, reboot, sleep, control\n"
        "nvm_size = 4096\n");
    CHECK(c.page_size == 32);
    CHECK(c.backend == Backend::Rewinding);
    CHECK(c.optimize.empty());
    CHECK(c.nvm_size == 4096);
    REQUIRE(c.events.size() == 4);
    CHECK(c.events[3] == "control");

    VmConfig c2 = parse_config(
        "events = boot, reboot, sleep\n"
        "page_size = 64\n"
        "optimize = BLOCK_FUSION, LOOP_OPT\n"
        "backend = JUST_IN_TIME\n"
        "queue_capacity = 4\n");
    CHECK(c2.page_size == 64);
    CHECK(c2.has_opt(Optimization::BlockFusion));
    CHECK(c2.has_opt(Optimization::LoopOpt));
    CHECK(c2.backend == Backend::JustInTime);
}

TEST_CASE("config: errors") {
    CHECK_THROWS_AS(parse_config("nvm_size = 4096\n"), ConfigError);                    // no events
    CHECK_THROWS_AS(parse_config("events = boot, reboot\n"), ConfigError);              // no sleep
    CHECK_THROWS_AS(parse_config("events = boot, reboot, sleep\npage_size = 48\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("events = boot, reboot, sleep\nnvm_size = 100\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("events = boot, reboot, sleep\nwat = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("events = boot, reboot, sleep\nnvm_size = 64\nnvm_size = 64\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config("events = boot, boot, reboot, sleep\n"), ConfigError);
    try {
        parse_config("events = boot, reboot, sleep\nbackend = TURBO\n");
        FAIL("expected config error");
    } catch (const ConfigError& e) {
        CHECK(e.where().line == 2);
    }
}

// ---- type terms ---------------------------------------------------------

namespace {

TypePtr random_type(std::mt19937& rng, int depth) {
    switch (rng() % (depth > 2 ? 5u : 7u)) {
        case 0: return t_int();
        case 1: return t_float();
        case 2: return t_bool();
        case 3: return t_void();
        case 4: return t_var(static_cast<int>(rng() % 4));
        case 5: return t_arrow(random_type(rng, depth + 1), random_type(rng, depth + 1));
        default: return t_array(random_type(rng, depth + 1), 1 + static_cast<long>(rng() % 8));
    }
}

}  // namespace

TEST_CASE("unify: basic cases") {
    Subst s;
    unify(t_var(1), t_int(), s, Pos{1, 1});
    CHECK(type_equal(s.apply(t_var(1)), t_int()));

    unify(t_arrow(t_var(2), t_bool()), t_arrow(t_float(), t_var(3)), s, Pos{1, 1});
    CHECK(type_equal(s.apply(t_var(2)), t_float()));
    CHECK(type_equal(s.apply(t_var(3)), t_bool()));

    CHECK_THROWS_AS(unify(t_int(), t_bool(), s, Pos{1, 1}), TypeError);
    CHECK_THROWS_AS(unify(t_array(t_int(), 4), t_array(t_int(), 8), s, Pos{1, 1}), TypeError);

    // Wildcard-length arrays match any length.
    Subst s2;
    unify(t_array(t_var(9), -1), t_array(t_int(), 128), s2, Pos{1, 1});
    CHECK(type_equal(s2.apply(t_var(9)), t_int()));
}

TEST_CASE("unify: occurs check") {
    Subst s;
    CHECK_THROWS_AS(unify(t_var(1), t_arrow(t_var(1), t_int()), s, Pos{1, 1}), TypeError);
}

TEST_CASE("substitution application is idempotent") {
    std::mt19937 rng(42);
    for (int round = 0; round < 300; ++round) {
        Subst s;
        TypePtr a = random_type(rng, 0);
        TypePtr b = random_type(rng, 0);
        try {
            unify(a, b, s, Pos{1, 1});
        } catch (const TypeError&) {
            continue;
        }
        for (TypePtr t : {a, b, random_type(rng, 0)}) {
            TypePtr once = s.apply(t);
            TypePtr twice = s.apply(once);
            CHECK(type_equal(once, twice));
        }
        // Unified terms are equal under the substitution.
        CHECK(type_equal(s.apply(a), s.apply(b)));
    }
}

// ---- inference ----------------------------------------------------------

namespace {

TypedProgram infer_src(const std::string& src) {
    return infer_program(std::make_shared<SourceProgram>(parse_program(src)));
}

std::string sig_of(const TypedProgram& tp, const std::string& name) {
    const TypedCallable* c = tp.find(name);
    REQUIRE(c != nullptr);
    return show_callable(*c);
}

}  // namespace

TEST_CASE("inference: built-in signatures are reproduced exactly") {
    TypedProgram tp = infer_src("event boot(x: Void) { x }\n");
    CHECK(sig_of(tp, "select") == "primitive select(b: Bool)(t: %a, f: %a) -> %a");
    CHECK(sig_of(tp, "apply") == "primitive apply(a: %a)(func: %a -> %b) -> %b");
    CHECK(sig_of(tp, "getTemp") == "primitive getTemp(x: Float)() -> Float [IO] [write x]");
}

TEST_CASE("inference: ifElse gets its principal signature without annotations") {
    TypedProgram tp = infer_src("event boot(x: Void) { x }\n");
    CHECK(sig_of(tp, "ifElse") ==
          "func ifElse(p: %a)(s: %a -> Bool, t: %a -> %b, f: %a -> %b) -> %b");
}

TEST_CASE("inference: local bindings and handler grounding") {
    TypedProgram tp = infer_src(
        "global limit: Float = 20.5\n"
        "func hot(t: Float) -> Bool { t.fgt(limit) }\n"
        "func idle(t: Float) -> Void { t.toVoid() }\n"
        "func mark(t: Float) -> Void { t.toVoid() }\n"
        "event check(t: Float) {\n"
        "  t.ifElse(hot, mark, idle)\n"
        "}\n");
    CHECK(sig_of(tp, "hot") == "func hot(t: Float)() -> Bool");
    CHECK(sig_of(tp, "check") == "event check(t: Float)() -> Void");
}

TEST_CASE("inference: write sets propagate through calls") {
    TypedProgram tp = infer_src(
        "global counter: Int\n"
        "func bump(x: Void) -> Int { counter.inc() }\n"
        "func touch(y: Int) -> Int { y.set(5) }\n"
        "event boot(x: Void) { x.bump().touch().toVoid() }\n");
    const TypedCallable* bump = tp.find("bump");
    REQUIRE(bump != nullptr);
    CHECK(bump->write_globals.count("counter") == 1);
    CHECK_FALSE(bump->write_flow);
    const TypedCallable* touch = tp.find("touch");
    CHECK(touch->write_flow);
}

TEST_CASE("inference: rejections carry positions") {
    struct Case {
        const char* src;
        const char* what;
    };
    const Case cases[] = {
        {"func f(x: Int) -> Bool { x.add(1) }", "flow-out mismatch"},
        {"func f(x: Int) -> Int { x.fadd(1.0) }", "float op on int"},
        {"event e(x: %a) { x.toVoid() }", "non-ground handler"},
        {"func f(x: Int) -> Int { y.add(1) }", "unbound name"},
        {"func f(x: Int) -> Int { x.add(1, 2) }", "arity"},
        {"global g: Wat", "unknown type"},
        {"global g: Int = 1.5", "initializer type"},
        {"func f(x: Int) -> Int { x.add(1) }\nfunc f(x: Int) -> Int { x.add(2) }", "duplicate"},
        {"event e(x: Void) { x.set(true).toVoid() }", "void/bool mismatch"},
        {"func f(x: Int) -> Int [IO] { x.add(1) }", "metadata on func"},
    };
    for (const auto& c : cases) {
        CAPTURE(c.what);
        try {
            infer_src(c.src);
            FAIL_CHECK("expected type error for: ", c.what);
        } catch (const TypeError& e) {
            CHECK(e.where().line >= 1);
        } catch (const SyntaxError& e) {
            CHECK(e.where().line >= 1);
        }
    }
}

TEST_CASE("inference: interrupt shape") {
    TypedProgram tp = infer_src(
        "event control(t: Float) { t.toVoid() }\n"
        "interrupt timer(t: Float) { t.addEventQ(control) }\n");
    const TypedCallable* c = tp.find("timer");
    REQUIRE(c != nullptr);
    CHECK(c->event_target == "control");

    CHECK_THROWS_AS(infer_src("interrupt t(v: Float) { v.toVoid() }"), TypeError);
    CHECK_THROWS_AS(infer_src("event e(x: Void) { x.addEventQ(e) }"), TypeError);
    CHECK_THROWS_AS(infer_src("func g(v: Float) -> Bool { v.flt(1.0) }\n"
                              "interrupt t(v: Float) { v.addEventQ(g) }"),
                    TypeError);
}

TEST_CASE("check listing is stable and complete") {
    TypedProgram tp = infer_src(
        "global n: Int\n"
        "func stepUp(x: Void) -> Int { n.inc() }\n"
        "event boot(x: Void) { x.stepUp().toVoid() }\n");
    std::string listing = check_listing(tp);
    CHECK(listing.find("primitive select(b: Bool)(t: %a, f: %a) -> %a\n") != std::string::npos);
    CHECK(listing.find("func ifElse(p: %a)(s: %a -> Bool, t: %a -> %b, f: %a -> %b) -> %b\n") !=
          std::string::npos);
    CHECK(listing.find("global n: Int\n") != std::string::npos);
    CHECK(listing.find("event boot(x: Void)() -> Void\n") != std::string::npos);
    // Byte-stable across repeated runs.
    TypedProgram tp2 = infer_src(
        "global n: Int\n"
        "func stepUp(x: Void) -> Int { n.inc() }\n"
        "event boot(x: Void) { x.stepUp().toVoid() }\n");
    CHECK(check_listing(tp2) == listing);
}
