#include "purevm/fuzz.hpp"

#include <algorithm>
#include <atomic>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace purevm {

namespace {

struct OneRun {
    RunReport rep;
    std::vector<std::uint32_t> globals;
    std::vector<std::uint32_t> trace;
    bool invariant_broken = false;
};

OneRun run_one(const IrProgram& base, Backend backend, const PowerModel& pm,
               const RunScript& script, const FuzzOptions& opt, bool want_trace) {
    IrProgram prog = base;
    prog.config.backend = backend;
    PowerDriver power(pm);
    Engine eng(prog, power, script);
    eng.collect_trace = want_trace;
    OneRun out;
    if (opt.invariant)
        eng.on_commit = [&](const Engine& e) {
            if (!opt.invariant(e)) out.invariant_broken = true;
        };
    out.rep = eng.run(opt.run_budget);
    out.globals = eng.globals_snapshot();
    out.trace = std::move(eng.trace);
    return out;
}

void check_run(std::vector<std::string>& fails, const OneRun& run, const OneRun& oracle,
               const FuzzOptions& opt, const std::string& where) {
    bool clean = true;
    if (!run.rep.trap.empty()) {
        fails.push_back(where + ": trapped: " + run.rep.trap);
        clean = false;
    } else if (!run.rep.halted) {
        fails.push_back(where + ": did not reach the halt state");
        clean = false;
    }
    if (opt.compare_state && clean) {
        if (run.rep.outputs != oracle.rep.outputs)
            fails.push_back(where + ": committed outputs diverge from the oracle");
        if (run.globals != oracle.globals)
            fails.push_back(where + ": final globals diverge from the oracle");
    }
    if (run.invariant_broken)
        fails.push_back(where + ": invariant '" + opt.invariant_name + "' violated at a commit");
}

PowerModel schedule_of(std::vector<std::uint64_t> ks) {
    PowerModel m;
    m.mode = PowerMode::Schedule;
    m.crash_steps = std::move(ks);
    return m;
}

// Derives an independent stream per work item so results do not depend on
// which worker runs it.
std::uint64_t item_seed(std::uint64_t seed, std::uint64_t item) {
    return seed + 0x9E3779B97F4A7C15ull * (item + 1);
}

struct ItemResult {
    std::uint64_t crashes = 0;
    std::uint64_t checkpoints = 0;
    std::vector<std::string> fails;
};

std::uint32_t resolve_jobs(std::uint32_t jobs) {
    if (jobs != 0) return jobs;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Runs fn(i) for i in [0, n) across workers; results come back in item
// order, so the merged report never depends on scheduling. The single
// worker path stops early once `enough` failures have accumulated.
template <typename Fn>
std::vector<ItemResult> run_items(std::uint64_t n, std::uint32_t jobs, std::uint64_t enough,
                                  Fn&& fn) {
    std::vector<ItemResult> results(n);
    jobs = resolve_jobs(jobs);
    if (jobs <= 1 || n <= 1) {
        std::uint64_t failures = 0;
        for (std::uint64_t i = 0; i < n; i++) {
            results[i] = fn(i);
            failures += results[i].fails.size();
            if (failures > enough) {
                results.resize(i + 1);
                break;
            }
        }
        return results;
    }
    std::atomic<std::uint64_t> next{0};
    std::vector<std::thread> pool;
    for (std::uint32_t w = 0; w < jobs; w++)
        pool.emplace_back([&] {
            for (;;) {
                std::uint64_t i = next.fetch_add(1);
                if (i >= n) return;
                results[i] = fn(i);
            }
        });
    for (auto& t : pool) t.join();
    return results;
}

void merge(FuzzReport& rep, const std::vector<ItemResult>& results) {
    for (const ItemResult& r : results) {
        rep.crashes_seen += r.crashes;
        rep.checkpoints_seen += r.checkpoints;
        for (const std::string& f : r.fails) {
            rep.failures++;
            if (rep.notes.size() < 8) rep.notes.push_back(f);
        }
    }
}

void note(FuzzReport& r, const std::string& what) {
    r.failures++;
    if (r.notes.size() < 8) r.notes.push_back(what);
}

std::set<BlockId> reachable_from(const IrProgram& p, BlockId entry) {
    std::set<BlockId> seen;
    std::vector<BlockId> work{entry};
    while (!work.empty()) {
        BlockId b = work.back();
        work.pop_back();
        if (!seen.insert(b).second) continue;
        const Terminator& t = p.blocks[b].term;
        if (t.kind == TermKind::PushCont)
            for (BlockId c : t.conts) work.push_back(c);
        if (t.kind == TermKind::SelectCont) {
            work.push_back(t.then_block);
            work.push_back(t.else_block);
        }
    }
    return seen;
}

}  // namespace

FuzzReport crash_fuzz(const IrProgram& prog, const RunScript& script, const FuzzOptions& opt) {
    FuzzReport rep;

    OneRun oracle = run_one(prog, Backend::Test, PowerModel{}, script, opt, false);
    rep.oracle_steps = oracle.rep.steps;
    if (!oracle.rep.trap.empty()) {
        note(rep, "oracle run trapped: " + oracle.rep.trap);
        return rep;
    }
    if (oracle.invariant_broken)
        note(rep, "oracle run violates invariant '" + opt.invariant_name + "'");

    OneRun base = run_one(prog, Backend::Rewinding, PowerModel{}, script, opt, false);
    rep.base_steps = base.rep.steps;
    {
        std::vector<std::string> fails;
        check_run(fails, base, oracle, opt, "continuous rewinding run");
        for (const auto& f : fails) note(rep, f);
    }

    // Single-crash sweep over the baseline's step range.
    std::uint64_t b0 = rep.base_steps;
    rep.exhaustive = b0 <= opt.budget;
    std::vector<std::uint64_t> points;
    if (rep.exhaustive) {
        points.reserve(b0);
        for (std::uint64_t k = 1; k <= b0; k++) points.push_back(k);
    } else {
        points.reserve(opt.budget);
        for (std::uint64_t i = 0; i < opt.budget; i++) {
            std::uint64_t k = 1 + (i * (b0 - 1)) / (opt.budget - 1);
            if (points.empty() || points.back() != k) points.push_back(k);
        }
    }
    auto singles = run_items(points.size(), opt.jobs, 64, [&](std::uint64_t i) {
        std::uint64_t k = points[i];
        OneRun run = run_one(prog, Backend::Rewinding, schedule_of({k}), script, opt, false);
        ItemResult res;
        res.crashes = run.rep.reboots;
        check_run(res.fails, run, oracle, opt, "single crash at step " + std::to_string(k));
        return res;
    });
    rep.single_tried = singles.size();
    merge(rep, singles);
    if (rep.failures > 64) return rep;

    // Random multi-crash schedules, covering crash-during-recovery.
    std::uint64_t span = b0 + b0 / 2 + 16;
    auto multis = run_items(opt.multi_rounds, opt.jobs, 64, [&](std::uint64_t round) {
        std::mt19937_64 rng(item_seed(opt.seed, round));
        std::uniform_int_distribution<std::uint64_t> pick(1, span);
        std::vector<std::uint64_t> ks;
        for (std::uint32_t i = 0; i < opt.multi_crashes; i++) ks.push_back(pick(rng));
        std::sort(ks.begin(), ks.end());
        ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
        OneRun run = run_one(prog, Backend::Rewinding, schedule_of(ks), script, opt, false);
        ItemResult res;
        res.crashes = run.rep.reboots;
        std::ostringstream where;
        where << "crash schedule {";
        for (std::size_t i = 0; i < ks.size(); i++) where << (i ? "," : "") << ks[i];
        where << "}";
        check_run(res.fails, run, oracle, opt, where.str());
        return res;
    });
    rep.multi_tried = multis.size();
    merge(rep, multis);
    return rep;
}

FuzzReport jit_fuzz(const IrProgram& prog, const RunScript& script, const FuzzOptions& opt) {
    FuzzReport rep;

    OneRun oracle = run_one(prog, Backend::Test, PowerModel{}, script, opt, true);
    rep.oracle_steps = oracle.rep.steps;
    if (!oracle.rep.trap.empty()) {
        note(rep, "oracle run trapped: " + oracle.rep.trap);
        return rep;
    }

    // A crash run additionally dispatches reboot events. When the reboot
    // handler's blocks carry no instructions and are private to it, the
    // instruction trace must match the oracle's exactly.
    bool check_trace = false;
    int reboot_id = prog.event_id("reboot");
    if (reboot_id >= 0) {
        std::set<BlockId> reboot_blocks = reachable_from(prog, prog.handlers[reboot_id].entry);
        std::set<BlockId> others;
        for (std::size_t ev = 0; ev < prog.handlers.size(); ev++) {
            if (static_cast<int>(ev) == reboot_id) continue;
            for (BlockId b : reachable_from(prog, prog.handlers[ev].entry)) others.insert(b);
        }
        check_trace = true;
        for (BlockId b : reboot_blocks) {
            if (!prog.blocks[b].instrs.empty() || others.count(b)) check_trace = false;
        }
    }
    if (!check_trace)
        rep.notes.push_back("note: reboot handler does real work, trace equality not checked");

    auto rounds = run_items(opt.jit_rounds, opt.jobs, 64, [&](std::uint64_t round) {
        std::mt19937_64 rng(item_seed(opt.seed, round));
        std::uniform_real_distribution<double> cap_pick(300.0, 1800.0);
        std::uniform_real_distribution<double> off_pick(10.0, 60.0);
        std::uniform_int_distribution<int> harvest_pick(0, 3);
        static const std::vector<std::vector<double>> harvests = {
            {}, {1, 0}, {1, 0, 0}, {2, 0, 0, 0}};
        PowerModel pm;
        pm.mode = PowerMode::Energy;
        pm.capacity = cap_pick(rng);
        pm.threshold_off = off_pick(rng);
        pm.harvest = harvests[static_cast<std::size_t>(harvest_pick(rng))];
        if (pm.capacity - pm.threshold_off <= 2 * kJitMargin)
            pm.capacity = pm.threshold_off + 2 * kJitMargin + 50;

        OneRun run = run_one(prog, Backend::JustInTime, pm, script, opt, true);
        ItemResult res;
        res.crashes = run.rep.reboots;
        res.checkpoints = run.rep.checkpoints;
        std::ostringstream where;
        where << "energy trace " << round << " (capacity " << pm.capacity << ", off "
              << pm.threshold_off << ")";
        std::size_t before = res.fails.size();
        check_run(res.fails, run, oracle, opt, where.str());
        if (res.fails.size() == before && check_trace && run.trace != oracle.trace)
            res.fails.push_back(where.str() + ": instruction trace differs, work was re-executed");
        return res;
    });
    rep.jit_tried = rounds.size();
    merge(rep, rounds);
    return rep;
}

std::string render_fuzz_report(const FuzzReport& r) {
    std::ostringstream os;
    os << (r.ok() ? "PASS" : "FAIL") << ": " << r.failures << " failure(s)\n";
    for (const auto& n : r.notes) os << "  " << n << "\n";
    os << "oracle_steps " << r.oracle_steps << "\n";
    os << "base_steps " << r.base_steps << "\n";
    os << "exhaustive " << (r.exhaustive ? 1 : 0) << "\n";
    os << "single_tried " << r.single_tried << "\n";
    os << "multi_tried " << r.multi_tried << "\n";
    os << "jit_tried " << r.jit_tried << "\n";
    os << "crashes_seen " << r.crashes_seen << "\n";
    os << "checkpoints_seen " << r.checkpoints_seen << "\n";
    os << "failures " << r.failures << "\n";
    return os.str();
}

}  // namespace purevm
