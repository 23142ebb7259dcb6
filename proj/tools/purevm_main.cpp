#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "purevm/bench.hpp"
#include "purevm/cir.hpp"
#include "purevm/config.hpp"
#include "purevm/fuzz.hpp"
#include "purevm/infer.hpp"
#include "purevm/lower.hpp"
#include "purevm/parser.hpp"
#include "purevm/power.hpp"
#include "purevm/script.hpp"
#include "purevm/vm.hpp"

using namespace purevm;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(Pos{0, 0}, "cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void emit(const std::string& out_path, const std::string& data) {
    if (out_path.empty() || out_path == "-") {
        std::cout << data;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw ConfigError(Pos{0, 0}, "cannot write '" + out_path + "'");
    out << data;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Shared by run/crashfuzz/report: either a source file compiled against
// --config, or a compiled image that carries its own.
IrProgram load_program(const std::string& path, const std::string& cfg_path) {
    if (ends_with(path, ".cir")) {
        if (!cfg_path.empty())
            throw ConfigError(Pos{0, 0}, "a compiled image carries its machine config; "
                                         "drop --config or compile from source");
        return load_cir(path);
    }
    if (cfg_path.empty())
        throw ConfigError(Pos{0, 0}, "--config is required to compile '" + path + "'");
    return compile_program(slurp(path), parse_config(slurp(cfg_path)));
}

// 0 success, 1 failed verification (bad program or bad result),
// 2 bad usage or config.
template <typename F>
int guarded(F f) {
    try {
        return f();
    } catch (const ConfigError& e) {
        std::cerr << "purevm: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "purevm: " << e.what() << "\n";
        return 1;
    } catch (const CirError& e) {
        std::cerr << "purevm: " << e.what() << "\n";
        return 1;
    } catch (const VmError& e) {
        std::cerr << "purevm: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "purevm: " << e.what() << "\n";
        return 2;
    }
}

struct CheckArgs {
    std::string src;
};

int do_check(const CheckArgs& a) {
    TypedProgram tp = infer_program(std::make_shared<SourceProgram>(parse_program(slurp(a.src))));
    std::cout << check_listing(tp);
    return 0;
}

struct CompileArgs {
    std::string src;
    std::string config;
    std::string out;
    bool emit_text = false;
};

int do_compile(const CompileArgs& a) {
    IrProgram prog = compile_program(slurp(a.src), parse_config(slurp(a.config)));
    std::string out = a.out;
    if (out.empty()) out = std::filesystem::path(a.src).replace_extension(".cir").string();
    save_cir(out, prog);
    std::cerr << "wrote " << out << "\n";
    if (a.emit_text) std::cout << render_ir(prog);
    return 0;
}

struct RunArgs {
    std::string prog;
    std::string config;
    std::string backend;
    std::string power;
    std::vector<std::uint64_t> crash_at;
    std::string script;
    std::uint64_t budget = 200000000;
    bool trace = false;
    std::string dump_nvm;
    std::string out;
};

int do_run(const RunArgs& a) {
    IrProgram prog = load_program(a.prog, a.config);
    if (!a.backend.empty()) prog.config.backend = parse_backend(a.backend, Pos{0, 0});

    if (!a.power.empty() && !a.crash_at.empty())
        throw ConfigError(Pos{0, 0}, "--power and --crash-at are exclusive");
    PowerModel pm = parse_power(a.power);
    if (!a.crash_at.empty()) {
        pm.mode = PowerMode::Schedule;
        pm.crash_steps = a.crash_at;
        std::sort(pm.crash_steps.begin(), pm.crash_steps.end());
    }

    RunScript script;
    if (!a.script.empty()) script = parse_script(slurp(a.script), prog);

    PowerDriver power(pm);
    Engine eng(prog, power, script);
    if (a.trace) eng.trace_out = &std::cout;
    RunReport rep = eng.run(a.budget);

    if (!a.dump_nvm.empty()) save_nvm(a.dump_nvm, eng.memory());
    emit(a.out, render_run_report(rep));
    return rep.halted && rep.trap.empty() ? 0 : 1;
}

struct FuzzArgs {
    std::string prog;
    std::string config;
    std::string script;
    std::string backend = "both";
    std::uint64_t budget = 100000;
    std::uint32_t multi = 100;
    std::uint32_t jit_rounds = 200;
    std::vector<std::uint64_t> seeds{1};
    std::uint32_t jobs = 0;
    bool no_state_compare = false;
};

int do_crashfuzz(const FuzzArgs& a) {
    IrProgram prog = load_program(a.prog, a.config);
    RunScript script;
    if (!a.script.empty()) script = parse_script(slurp(a.script), prog);

    std::vector<std::uint64_t> seeds = a.seeds;
    if (const char* env = std::getenv("PUREVM_SEED")) seeds = {std::stoull(env)};

    bool ok = true;
    for (std::uint64_t seed : seeds) {
        FuzzOptions opt;
        opt.budget = a.budget;
        opt.multi_rounds = a.multi;
        opt.jit_rounds = a.jit_rounds;
        opt.seed = seed;
        opt.jobs = a.jobs;
        opt.compare_state = !a.no_state_compare;
        if (a.backend == "rewinding" || a.backend == "both") {
            FuzzReport r = crash_fuzz(prog, script, opt);
            std::cout << "crashfuzz " << a.prog << " backend=REWINDING seed=" << seed << "\n"
                      << render_fuzz_report(r);
            ok = ok && r.ok();
        }
        if (a.backend == "jit" || a.backend == "both") {
            FuzzReport r = jit_fuzz(prog, script, opt);
            std::cout << "crashfuzz " << a.prog << " backend=JUST_IN_TIME seed=" << seed << "\n"
                      << render_fuzz_report(r);
            ok = ok && r.ok();
        }
    }
    return ok ? 0 : 1;
}

struct BenchArgs {
    std::string name;
    std::vector<std::string> opts;
    std::string backend;
    std::string power;
    bool opt_sweep = false;
    bool page_sweep = false;
};

std::string canonical_bench(std::string n) {
    for (char& c : n) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (n == "bc") return "bitcount";
    if (n == "cf") return "cuckoo-filter";
    if (n == "ar") return "activity";
    if (n == "sense") return "sense-heater";
    return n;
}

int do_bench(const BenchArgs& a) {
    std::vector<BenchProgram> suite = benchmark_suite();
    if (!a.name.empty()) {
        std::string want = canonical_bench(a.name);
        std::vector<BenchProgram> picked;
        for (auto& b : suite)
            if (b.name == want) picked.push_back(std::move(b));
        if (picked.empty())
            throw ConfigError(Pos{0, 0}, "unknown benchmark '" + a.name +
                                         "' (expected BC, CF, AR or SENSE)");
        suite = std::move(picked);
    }

    bool ok = true;
    if (a.opt_sweep) {
        for (const auto& b : suite) {
            OptReport r = compare_optimizations(b);
            std::cout << render_opt_report(r);
            ok = ok && r.ok;
        }
        return ok ? 0 : 1;
    }
    if (a.page_sweep) {
        for (const auto& b : suite) {
            PageReport r = compare_page_sizes(b, {16, 32, 64, 128});
            std::cout << render_page_report(r);
            ok = ok && r.ok;
        }
        return ok ? 0 : 1;
    }

    std::vector<std::string> levels = a.opts;
    if (levels.empty()) levels = {"none", "fusion", "fusion+loop"};
    PowerModel pm = parse_power(a.power);

    std::vector<BenchOutcome> rows;
    for (const auto& b : suite)
        for (const std::string& lv : levels) {
            std::string extra;
            if (lv == "fusion") extra = "optimize = BLOCK_FUSION\n";
            if (lv == "fusion+loop") extra = "optimize = BLOCK_FUSION, LOOP_OPT\n";
            if (!a.backend.empty()) extra += "backend = " + a.backend + "\n";
            rows.push_back(run_bench(b, extra, pm));
            ok = ok && rows.back().ok;
        }
    std::cout << render_bench_table(rows);
    return ok ? 0 : 1;
}

struct ReportArgs {
    std::string prog;
    std::string config;
    std::string out;
};

int do_report(const ReportArgs& a) {
    IrProgram prog = load_program(a.prog, a.config);
    std::ostringstream os;
    os << "program " << a.prog << "\n";
    os << "backend " << backend_name(prog.config.backend) << "\n";
    os << "optimize";
    if (prog.config.optimize.empty()) os << " -";
    if (prog.config.has_opt(Optimization::BlockFusion)) os << " BLOCK_FUSION";
    if (prog.config.has_opt(Optimization::LoopOpt)) os << " LOOP_OPT";
    os << "\n";
    os << "events";
    for (const auto& e : prog.config.events) os << " " << e;
    os << "\n";
    os << "handlers:\n";
    for (std::size_t ev = 0; ev < prog.handlers.size(); ev++)
        os << "  " << prog.config.events[ev] << " -> b" << prog.handlers[ev].entry << "\n";
    if (!prog.interrupts.empty()) {
        os << "interrupts:\n";
        for (const auto& [name, ev] : prog.interrupts)
            os << "  " << name << " -> " << prog.config.events[ev] << "\n";
    }
    os << "globals:\n";
    for (const auto& [name, slot] : prog.global_slots)
        os << "  " << name << " c" << slot << " @" << prog.cells[slot].addr << "\n";
    os << render_ir(prog);
    emit(a.out, os.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"toolchain and intermittent-power simulator for event-driven programs"};
    app.require_subcommand(1);

    CheckArgs ck;
    CLI::App* check = app.add_subcommand("check", "parse and type-check, print inferred signatures");
    check->add_option("src", ck.src, "source file")->required();

    CompileArgs cp;
    CLI::App* compile = app.add_subcommand("compile", "compile a source file to a .cir image");
    compile->add_option("src", cp.src, "source file")->required();
    compile->add_option("--config", cp.config, "machine config file")->required();
    compile->add_option("-o,--output", cp.out, "output path (default: source with .cir)");
    compile->add_flag("--emit-text", cp.emit_text, "print the compiled listing to stdout");

    RunArgs rn;
    CLI::App* run = app.add_subcommand("run", "execute a program on a simulated supply");
    run->add_option("prog", rn.prog, "source file or .cir image")->required();
    run->add_option("--config", rn.config, "machine config file (source input only)");
    run->add_option("--backend", rn.backend, "REWINDING, JUST_IN_TIME or TEST");
    run->add_option("--power", rn.power,
                    "continuous | steps:a,b,c | energy:capacity,off,harvest (harvest may be @file)");
    run->add_option("--crash-at", rn.crash_at, "power failure at these micro steps")->delimiter(',');
    run->add_option("--script", rn.script, "interrupt and sensor script file");
    run->add_option("--budget", rn.budget, "micro step limit");
    run->add_flag("--trace", rn.trace, "one line per micro step on stdout");
    run->add_option("--dump-nvm", rn.dump_nvm, "write final nonvolatile memory to this file");
    run->add_option("-o,--output", rn.out, "write the run report here instead of stdout");

    FuzzArgs fz;
    CLI::App* fuzz = app.add_subcommand("crashfuzz", "verify crash consistency against the oracle");
    fuzz->add_option("prog", fz.prog, "source file or .cir image")->required();
    fuzz->add_option("--config", fz.config, "machine config file (source input only)");
    fuzz->add_option("--script", fz.script, "interrupt and sensor script file");
    fuzz->add_option("--backend", fz.backend, "rewinding, jit or both")
        ->check(CLI::IsMember({"rewinding", "jit", "both"}));
    fuzz->add_option("--budget", fz.budget, "max single-crash points (exhaustive when it covers the run)");
    fuzz->add_option("--multi", fz.multi, "random multi-crash schedules");
    fuzz->add_option("--jit-rounds", fz.jit_rounds, "random energy traces for the jit backend");
    fuzz->add_option("--seeds", fz.seeds, "schedule seeds")->delimiter(',');
    fuzz->add_option("--jobs", fz.jobs, "worker threads (0: one per logical cpu)");
    fuzz->add_flag("--no-state-compare", fz.no_state_compare,
                   "only check for traps and invariants, not oracle equality");

    BenchArgs bn;
    CLI::App* bench = app.add_subcommand("bench", "run the benchmark programs");
    bench->add_option("--name", bn.name, "BC, CF, AR or SENSE (default: all)");
    bench->add_option("--opt", bn.opts, "optimization levels to run")
        ->check(CLI::IsMember({"none", "fusion", "fusion+loop"}))
        ->delimiter(',');
    bench->add_option("--backend", bn.backend, "REWINDING, JUST_IN_TIME or TEST");
    bench->add_option("--power", bn.power, "power model (default continuous)");
    bench->add_flag("--opt-sweep", bn.opt_sweep,
                    "compare optimization levels and check commits and logged pages never grow");
    bench->add_flag("--page-sweep", bn.page_sweep, "run page sizes 16/32/64/128, outputs must agree");

    ReportArgs rp;
    CLI::App* report = app.add_subcommand("report", "print the compiled layout and code of a program");
    report->add_option("prog", rp.prog, "source file or .cir image")->required();
    report->add_option("--config", rp.config, "machine config file (source input only)");
    report->add_option("-o,--output", rp.out, "write the report here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (app.got_subcommand(check)) return guarded([&] { return do_check(ck); });
    if (app.got_subcommand(compile)) return guarded([&] { return do_compile(cp); });
    if (app.got_subcommand(run)) return guarded([&] { return do_run(rn); });
    if (app.got_subcommand(fuzz)) return guarded([&] { return do_crashfuzz(fz); });
    if (app.got_subcommand(bench)) return guarded([&] { return do_bench(bn); });
    if (app.got_subcommand(report)) return guarded([&] { return do_report(rp); });
    return 2;
}
