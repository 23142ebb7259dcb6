#include "purevm/bench.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <sstream>

#include "purevm/config.hpp"
#include "purevm/lower.hpp"
#include "purevm/power.hpp"

namespace purevm {
namespace {

struct Lcg {
    std::uint64_t s = kBenchInputSeed;
    std::uint32_t next() {
        s = s * 6364136223846793005ull + 1442695040888963407ull;
        return static_cast<std::uint32_t>(s >> 32);
    }
};

std::uint32_t f2b(float f) { return std::bit_cast<std::uint32_t>(f); }

OutputRecord r_int(std::uint32_t v) { return {ValTag::Int, v, false}; }
OutputRecord r_bool(bool v) { return {ValTag::Bool, v ? 1u : 0u, false}; }
OutputRecord r_cmd(std::uint32_t v) { return {ValTag::Int, v, true}; }

void push_event(RunScript& sc, const std::string& isr, std::uint32_t payload) {
    ScriptEvent ev;
    ev.at_step = 1 + 64 * sc.events.size();
    ev.interrupt = isr;
    ev.payload_bits = payload;
    sc.events.push_back(ev);
}

std::string replace_all(std::string text, const std::string& key, const std::string& value) {
    for (size_t p = text.find(key); p != std::string::npos; p = text.find(key, p))
        text.replace(p, key.size(), value);
    return text;
}

// ---------------------------------------------------------------------------
// Write-after-read counter: the canonical idempotency hazard. Each event
// reads the counter, appends to the history array, then bumps the counter.

const char* kWarSource = R"PL(
global hist: Array<Int, 32>
global n: Int = 0

event boot(x: Void) { x.toVoid() }
event bump(k: Int) {
    i = n.postInc()
    w = hist.setAt(i.bitAnd(31), k.add(i)).toVoid()
    e = n.emit().toVoid()
    k.toVoid()
}
event reboot(x: Void) { x.toVoid() }
event sleep(x: Void) { x.toVoid() }

interrupt bumpIsr(k: Int) { k.addEventQ(bump) }
)PL";

BenchProgram make_war() {
    BenchProgram b;
    b.name = "war-counter";
    b.source = kWarSource;
    b.config = "events = boot, reboot, sleep, bump\n";
    Lcg rng;
    for (int j = 0; j < 8; ++j) {
        push_event(b.script, "bumpIsr", rng.next() % 100);
        b.expected.push_back(r_int(j + 1));
    }
    return b;
}

// ---------------------------------------------------------------------------
// Alarm flag pair: both flags derive from one sensor reading and must never
// disagree, no matter where execution is cut.

const char* kAtomSource = R"PL(
global alarm: Bool = false
global tempOK: Bool = false
global threshold: Float = 30.0
global reading: Float = 0.0

event boot(x: Void) { x.toVoid() }
event check(x: Void) {
    t = reading.getTemp()
    a = alarm.set(t.fgt(threshold)).toVoid()
    o = tempOK.set(t.fle(threshold)).toVoid()
    p = alarm.emit().toVoid()
    q = tempOK.emit().toVoid()
    a.toVoid()
}
event reboot(x: Void) { x.toVoid() }
event sleep(x: Void) { x.toVoid() }

interrupt sense(x: Void) { x.addEventQ(check) }
)PL";

bool flags_consistent(const Engine& e) {
    return !(e.global_bits("alarm") == 1 && e.global_bits("tempOK") == 1);
}

BenchProgram make_atom(bool varying) {
    BenchProgram b;
    b.name = varying ? "alarm-flags-varying" : "alarm-flags";
    b.source = kAtomSource;
    b.config = "events = boot, reboot, sleep, check\n";
    b.invariant = flags_consistent;
    b.invariant_name = "alarm and tempOK never both set";
    int checks = varying ? 8 : 6;
    if (varying) {
        b.script.temps = {35.0f, 25.0f};
        b.compare_state = false;  // a replayed read sees the next sample
    } else {
        b.script.temps = {25.0f};
    }
    for (int j = 0; j < checks; ++j) {
        push_event(b.script, "sense", 0);
        float t = b.script.temps[j % b.script.temps.size()];
        b.expected.push_back(r_bool(t > 30.0f));
        b.expected.push_back(r_bool(t <= 30.0f));
    }
    return b;
}

// ---------------------------------------------------------------------------
// Sensing pipeline: classify a reading and drive the heater, with the
// branch taken through the conditional helper.

const char* kSenseSource = R"PL(
global threshold: Float = 30.0
global reading: Float = 0.0

func isHot(t: Float) -> Bool { t.fgt(threshold) }
func heatOff(t: Float) -> Void { 0.sendCmd().toVoid() }
func heatOn(t: Float) -> Void { 1.sendCmd().toVoid() }

event boot(x: Void) { x.toVoid() }
event timer(x: Void) {
    t = reading.getTemp()
    t.ifElse(isHot, heatOff, heatOn)
}
event reboot(x: Void) { x.toVoid() }
event sleep(x: Void) { x.toVoid() }

interrupt tick(x: Void) { x.addEventQ(timer) }
)PL";

BenchProgram make_sense(bool full) {
    BenchProgram b;
    b.name = full ? "sense-heater" : "sense-heater-small";
    b.source = kSenseSource;
    b.config = "events = boot, reboot, sleep, timer\n";
    if (full)
        b.script.temps = {22.0f, 24.5f, 31.0f, 38.0f, 29.9f, 30.1f, 27.0f, 33.25f,
                          25.5f, 36.0f, 30.0f, 21.75f, 34.5f, 28.0f, 32.0f, 26.5f};
    else
        b.script.temps = {25.0f};
    int ticks = full ? 40 : 6;
    for (int j = 0; j < ticks; ++j) {
        push_event(b.script, "tick", 0);
        float t = b.script.temps[j % b.script.temps.size()];
        b.expected.push_back(r_cmd(t > 30.0f ? 0 : 1));
    }
    return b;
}

// ---------------------------------------------------------------------------
// Bit counting, seven ways. Lookup tables are built at boot; each input
// event runs all methods and emits seven counts that must agree.

const char* kBitcountSource = R"PL(
global num: Int = 0
global cur: Int = 0
global acc: Int = 0
global bi: Int = 0
global b8n: Int = @B8N@
global b16n: Int = @B16N@
global nib: Array<Int, 16>
global t8: Array<Int, 256>
global t16: Array<Int, 65536>

func allDone(x: Void) -> Void { x.toVoid() }

# method 7: one lookup per 16-bit half
func m7go(x: Void) -> Void {
    e = t16.getAt(num.bitAnd(65535)).add(t16.getAt(num.shr(16))).emit().toVoid()
    x.apply(allDone)
}

# method 6: parallel bit summation
func m6go(x: Void) -> Void {
    a = num.sub(num.shr(1).bitAnd(1431655765))
    b = a.bitAnd(858993459).add(a.shr(2).bitAnd(858993459))
    c = b.add(b.shr(4)).bitAnd(252645135)
    e = c.mul(16843009).shr(24).emit().toVoid()
    x.apply(m7go)
}

# method 5: one lookup per byte
func m5done(x: Void) -> Void {
    e = acc.emit().toVoid()
    x.apply(m6go)
}
func m5loop(x: Void) -> Void {
    a = acc.set(acc.add(t8.getAt(cur.bitAnd(255)))).toVoid()
    c = cur.set(cur.shr(8)).toVoid()
    k = cur.ne(0).select(m5loop, m5done)
    x.apply(k)
}
func m5go(x: Void) -> Void {
    a = acc.set(0).toVoid()
    c = cur.set(num).toVoid()
    k = cur.ne(0).select(m5loop, m5done)
    x.apply(k)
}

# method 4: one lookup per nibble
func m4done(x: Void) -> Void {
    e = acc.emit().toVoid()
    x.apply(m5go)
}
func m4loop(x: Void) -> Void {
    a = acc.set(acc.add(nib.getAt(cur.bitAnd(15)))).toVoid()
    c = cur.set(cur.shr(4)).toVoid()
    k = cur.ne(0).select(m4loop, m4done)
    x.apply(k)
}
func m4go(x: Void) -> Void {
    a = acc.set(0).toVoid()
    c = cur.set(num).toVoid()
    k = cur.ne(0).select(m4loop, m4done)
    x.apply(k)
}

# method 3: count the complement's set bits, subtract from the width
func m3done(x: Void) -> Void {
    e = 32.sub(acc).emit().toVoid()
    x.apply(m4go)
}
func m3loop(x: Void) -> Void {
    a = acc.inc().toVoid()
    c = cur.set(cur.bitAnd(cur.sub(1))).toVoid()
    k = cur.ne(0).select(m3loop, m3done)
    x.apply(k)
}
func m3go(x: Void) -> Void {
    a = acc.set(0).toVoid()
    c = cur.set(num.bitNot()).toVoid()
    k = cur.ne(0).select(m3loop, m3done)
    x.apply(k)
}

# method 2: clear the lowest set bit until none remain
func m2done(x: Void) -> Void {
    e = acc.emit().toVoid()
    x.apply(m3go)
}
func m2loop(x: Void) -> Void {
    a = acc.inc().toVoid()
    c = cur.set(cur.bitAnd(cur.sub(1))).toVoid()
    k = cur.ne(0).select(m2loop, m2done)
    x.apply(k)
}
func m2go(x: Void) -> Void {
    a = acc.set(0).toVoid()
    c = cur.set(num).toVoid()
    k = cur.ne(0).select(m2loop, m2done)
    x.apply(k)
}

# method 1: test every bit
func m1done(x: Void) -> Void {
    e = acc.emit().toVoid()
    x.apply(m2go)
}
func m1loop(x: Void) -> Void {
    a = acc.set(acc.add(cur.bitAnd(1))).toVoid()
    c = cur.set(cur.shr(1)).toVoid()
    k = cur.ne(0).select(m1loop, m1done)
    x.apply(k)
}
func m1go(x: Void) -> Void {
    a = acc.set(0).toVoid()
    c = cur.set(num).toVoid()
    k = cur.ne(0).select(m1loop, m1done)
    x.apply(k)
}

# boot-time table construction: each entry extends a previously built one
func b16done(x: Void) -> Void { x.toVoid() }
func b16loop(x: Void) -> Void {
    v = t16.setAt(bi, t16.getAt(bi.shr(1)).add(bi.bitAnd(1))).toVoid()
    i = bi.inc().toVoid()
    k = bi.lt(b16n).select(b16loop, b16done)
    x.apply(k)
}
func b16go(x: Void) -> Void {
    i = bi.set(1).toVoid()
    x.apply(b16loop)
}
func b8done(x: Void) -> Void { x.apply(b16go) }
func b8loop(x: Void) -> Void {
    v = t8.setAt(bi, t8.getAt(bi.shr(1)).add(bi.bitAnd(1))).toVoid()
    i = bi.inc().toVoid()
    k = bi.lt(b8n).select(b8loop, b8done)
    x.apply(k)
}
func b8go(x: Void) -> Void {
    i = bi.set(1).toVoid()
    x.apply(b8loop)
}

event number(n: Int) {
    s = num.set(n).toVoid()
    s.apply(m1go)
}

event boot(x: Void) {
    q0 = nib.setAt(0, 0).toVoid()
    q1 = nib.setAt(1, 1).toVoid()
    q2 = nib.setAt(2, 1).toVoid()
    q3 = nib.setAt(3, 2).toVoid()
    q4 = nib.setAt(4, 1).toVoid()
    q5 = nib.setAt(5, 2).toVoid()
    q6 = nib.setAt(6, 2).toVoid()
    q7 = nib.setAt(7, 3).toVoid()
    q8 = nib.setAt(8, 1).toVoid()
    q9 = nib.setAt(9, 2).toVoid()
    qa = nib.setAt(10, 2).toVoid()
    qb = nib.setAt(11, 3).toVoid()
    qc = nib.setAt(12, 2).toVoid()
    qd = nib.setAt(13, 3).toVoid()
    qe = nib.setAt(14, 3).toVoid()
    qf = nib.setAt(15, 4).toVoid()
    x.apply(b8go)
}

event reboot(x: Void) { x.toVoid() }
event sleep(x: Void) { x.toVoid() }

interrupt numberIsr(n: Int) { n.addEventQ(number) }
)PL";

BenchProgram make_bitcount(bool full) {
    BenchProgram b;
    b.name = full ? "bitcount" : "bitcount-small";
    b.source = replace_all(replace_all(kBitcountSource, "@B8N@", full ? "256" : "64"),
                           "@B16N@", full ? "65536" : "128");
    b.config = "events = boot, reboot, sleep, number\nnvm_size = 140032\n";
    Lcg rng;
    int inputs = full ? 100 : 1;
    for (int j = 0; j < inputs; ++j) {
        std::uint32_t v;
        if (full) {
            v = rng.next();
        } else {
            std::uint32_t hi = rng.next() % 64, lo = rng.next() % 64;
            v = (hi << 16) | lo;
        }
        push_event(b.script, "numberIsr", v);
        std::uint32_t pc = static_cast<std::uint32_t>(std::popcount(v));
        for (int m = 0; m < 7; ++m) b.expected.push_back(r_int(pc));
    }
    return b;
}

// ---------------------------------------------------------------------------
// Cuckoo filter: 32 buckets x 4 slots of 8-bit fingerprints in one flat
// array. The insert loop is straight-line; branching is folded into data
// selects so each probe, bucket switch or eviction is one pass.

const char* kCuckooSource = R"PL(
global buckets: Array<Int, 128>
global cfp: Int = 0
global ci: Int = 0
global slot: Int = 0
global kicks: Int = 0
global round: Int = 0
global placed: Int = 0
global failed: Int = 0

func cfInsDone(x: Void) -> Void {
    e = placed.emit().toVoid()
    x.toVoid()
}

# One probe step. Places the fingerprint into an empty slot, moves to the
# partner bucket after the first four misses, then starts evicting.
func cfIns(x: Void) -> Void {
    live = placed.eq(0).and(failed.eq(0))
    probing = live.and(slot.lt(4))
    idx = ci.mul(4).add(slot.bitAnd(3))
    e = buckets.getAt(idx)
    canPlace = probing.and(e.eq(0))
    w = buckets.setAt(idx, canPlace.select(cfp, e)).toVoid()
    p2 = placed.set(canPlace.select(1, placed)).toVoid()
    s2 = slot.set(canPlace.select(slot, slot.add(1))).toVoid()
    stuck = live.and(placed.eq(0)).and(slot.ge(4))
    doSwitch = stuck.and(round.eq(0))
    doKick = stuck.and(round.ge(1))
    vi = ci.mul(4).add(kicks.bitAnd(3))
    v = buckets.getAt(vi)
    w2 = buckets.setAt(vi, doKick.select(cfp, v)).toVoid()
    f2 = cfp.set(doKick.select(v, cfp)).toVoid()
    h2 = cfp.mul(73244475).shr(27)
    moved = doSwitch.or(doKick)
    c2 = ci.set(moved.select(ci.bitXor(h2), ci)).toVoid()
    s3 = slot.set(moved.select(0, slot)).toVoid()
    r2 = round.set(doSwitch.select(1, round)).toVoid()
    k2 = kicks.set(doKick.select(kicks.add(1), kicks)).toVoid()
    fl = failed.set(kicks.gt(32).select(1, failed)).toVoid()
    fin = placed.ne(0).or(failed.ne(0))
    k = fin.select(cfInsDone, cfIns)
    x.apply(k)
}

event boot(x: Void) { x.toVoid() }

event insert(v: Int) {
    h = v.mul(73244475)
    f0 = h.shr(24).bitAnd(255)
    p = cfp.set(f0.eq(0).select(1, f0)).toVoid()
    c = ci.set(h.shr(27)).toVoid()
    s = slot.set(0).toVoid()
    kk = kicks.set(0).toVoid()
    r = round.set(0).toVoid()
    pl = placed.set(0).toVoid()
    fl = failed.set(0).toVoid()
    fl.apply(cfIns)
}

event lookup(v: Int) {
    h = v.mul(73244475)
    f0 = h.shr(24).bitAnd(255)
    f = f0.eq(0).select(1, f0)
    a = h.shr(27)
    b = a.bitXor(f.mul(73244475).shr(27))
    r1 = buckets.getAt(a.mul(4)).eq(f)
    r2 = r1.or(buckets.getAt(a.mul(4).add(1)).eq(f))
    r3 = r2.or(buckets.getAt(a.mul(4).add(2)).eq(f))
    r4 = r3.or(buckets.getAt(a.mul(4).add(3)).eq(f))
    r5 = r4.or(buckets.getAt(b.mul(4)).eq(f))
    r6 = r5.or(buckets.getAt(b.mul(4).add(1)).eq(f))
    r7 = r6.or(buckets.getAt(b.mul(4).add(2)).eq(f))
    r8 = r7.or(buckets.getAt(b.mul(4).add(3)).eq(f))
    e = r8.select(1, 0).emit().toVoid()
    v.toVoid()
}

event reboot(x: Void) { x.toVoid() }
event sleep(x: Void) { x.toVoid() }

interrupt insertIsr(v: Int) { v.addEventQ(insert) }
interrupt lookupIsr(v: Int) { v.addEventQ(lookup) }
)PL";

std::uint32_t cf_hash(std::uint32_t v) { return v * 73244475u; }
std::uint32_t cf_fp(std::uint32_t v) {
    std::uint32_t f = (cf_hash(v) >> 24) & 255u;
    return f ? f : 1u;
}

// Host mirror of cfIns, one iteration per loop pass in the same order.
std::uint32_t cf_insert(std::array<std::uint32_t, 128>& bk, std::uint32_t val) {
    std::uint32_t cfp = cf_fp(val), ci = cf_hash(val) >> 27;
    std::uint32_t slot = 0, kicks = 0, round = 0, placed = 0, failed = 0;
    while (true) {
        bool live = placed == 0 && failed == 0;
        bool probing = live && slot < 4;
        std::uint32_t idx = ci * 4 + (slot & 3);
        std::uint32_t e = bk[idx];
        bool can_place = probing && e == 0;
        bk[idx] = can_place ? cfp : e;
        placed = can_place ? 1 : placed;
        slot = can_place ? slot : slot + 1;
        bool stuck = live && placed == 0 && slot >= 4;
        bool do_switch = stuck && round == 0;
        bool do_kick = stuck && round >= 1;
        std::uint32_t vi = ci * 4 + (kicks & 3);
        std::uint32_t v = bk[vi];
        bk[vi] = do_kick ? cfp : v;
        cfp = do_kick ? v : cfp;
        std::uint32_t h2 = cf_hash(cfp) >> 27;
        bool moved = do_switch || do_kick;
        ci = moved ? (ci ^ h2) : ci;
        slot = moved ? 0 : slot;
        round = do_switch ? 1 : round;
        kicks = do_kick ? kicks + 1 : kicks;
        failed = kicks > 32 ? 1 : failed;
        if (placed != 0 || failed != 0) return placed;
    }
}

std::uint32_t cf_query(const std::array<std::uint32_t, 128>& bk, std::uint32_t val) {
    std::uint32_t f = cf_fp(val);
    std::uint32_t a = cf_hash(val) >> 27;
    std::uint32_t b = a ^ (cf_hash(f) >> 27);
    for (std::uint32_t s = 0; s < 4; ++s)
        if (bk[a * 4 + s] == f || bk[b * 4 + s] == f) return 1;
    return 0;
}

BenchProgram make_cuckoo(bool full) {
    BenchProgram b;
    b.name = full ? "cuckoo-filter" : "cuckoo-filter-small";
    b.source = kCuckooSource;
    b.config = "events = boot, reboot, sleep, insert, lookup\n";
    Lcg rng;
    int n = full ? 100 : 16;
    std::vector<std::uint32_t> vals;
    for (int j = 0; j < n; ++j) vals.push_back(rng.next());
    std::array<std::uint32_t, 128> bk{};
    for (std::uint32_t v : vals) {
        push_event(b.script, "insertIsr", v);
        b.expected.push_back(r_int(cf_insert(bk, v)));
    }
    for (std::uint32_t v : vals) {
        push_event(b.script, "lookupIsr", v);
        b.expected.push_back(r_int(cf_query(bk, v)));
    }
    return b;
}

// ---------------------------------------------------------------------------
// Activity recognition: per-class mean/deviation models trained from
// events, then a sliding window of three is classified by nearest centroid.
// All arithmetic is single-precision and mirrored operation for operation.

const char* kActivitySource = R"PL(
global w0: Float = 0.0
global w1: Float = 0.0
global w2: Float = 0.0
global sumA: Float = 0.0
global sqA: Float = 0.0
global cntA: Float = 0.0
global sumB: Float = 0.0
global sqB: Float = 0.0
global cntB: Float = 0.0

event boot(x: Void) { x.toVoid() }

event trainA(v: Float) {
    s = sumA.set(sumA.fadd(v)).toVoid()
    q = sqA.set(sqA.fadd(v.fmul(v))).toVoid()
    c = cntA.set(cntA.fadd(1.0)).toVoid()
    v.toVoid()
}

event trainB(v: Float) {
    s = sumB.set(sumB.fadd(v)).toVoid()
    q = sqB.set(sqB.fadd(v.fmul(v))).toVoid()
    c = cntB.set(cntB.fadd(1.0)).toVoid()
    v.toVoid()
}

event classify(v: Float) {
    a = w0.set(w1).toVoid()
    b = w1.set(w2).toVoid()
    c = w2.set(v).toVoid()
    mean = w0.fadd(w1).fadd(w2).fdiv(3.0)
    msq = w0.fmul(w0).fadd(w1.fmul(w1)).fadd(w2.fmul(w2)).fdiv(3.0)
    vr0 = msq.fsub(mean.fmul(mean))
    vr = vr0.flt(0.0).select(0.0, vr0)
    sd = vr.fsqrt()
    mA = sumA.fdiv(cntA)
    vA0 = sqA.fdiv(cntA).fsub(mA.fmul(mA))
    vA = vA0.flt(0.0).select(0.0, vA0)
    sA = vA.fsqrt()
    mB = sumB.fdiv(cntB)
    vB0 = sqB.fdiv(cntB).fsub(mB.fmul(mB))
    vB = vB0.flt(0.0).select(0.0, vB0)
    sB = vB.fsqrt()
    dA = mean.fsub(mA).fmul(mean.fsub(mA)).fadd(sd.fsub(sA).fmul(sd.fsub(sA)))
    dB = mean.fsub(mB).fmul(mean.fsub(mB)).fadd(sd.fsub(sB).fmul(sd.fsub(sB)))
    lab = dA.fle(dB).select(0, 1)
    e = lab.emit().toVoid()
    v.toVoid()
}

event reboot(x: Void) { x.toVoid() }
event sleep(x: Void) { x.toVoid() }

interrupt feedA(v: Float) { v.addEventQ(trainA) }
interrupt feedB(v: Float) { v.addEventQ(trainB) }
interrupt sample(v: Float) { v.addEventQ(classify) }
)PL";

struct ArModel {
    float w0 = 0, w1 = 0, w2 = 0;
    float sum_a = 0, sq_a = 0, cnt_a = 0;
    float sum_b = 0, sq_b = 0, cnt_b = 0;

    void train_a(float v) {
        sum_a = sum_a + v;
        float vv = v * v;
        sq_a = sq_a + vv;
        cnt_a = cnt_a + 1.0f;
    }
    void train_b(float v) {
        sum_b = sum_b + v;
        float vv = v * v;
        sq_b = sq_b + vv;
        cnt_b = cnt_b + 1.0f;
    }
    std::uint32_t classify(float v) {
        w0 = w1;
        w1 = w2;
        w2 = v;
        float s01 = w0 + w1;
        float s = s01 + w2;
        float mean = s / 3.0f;
        float p0 = w0 * w0;
        float p1 = w1 * w1;
        float p2 = w2 * w2;
        float p01 = p0 + p1;
        float ps = p01 + p2;
        float msq = ps / 3.0f;
        float mm = mean * mean;
        float vr0 = msq - mm;
        float vr = vr0 < 0.0f ? 0.0f : vr0;
        float sd = std::sqrt(vr);
        float ma = sum_a / cnt_a;
        float qa = sq_a / cnt_a;
        float ma2 = ma * ma;
        float va0 = qa - ma2;
        float va = va0 < 0.0f ? 0.0f : va0;
        float sa = std::sqrt(va);
        float mb = sum_b / cnt_b;
        float qb = sq_b / cnt_b;
        float mb2 = mb * mb;
        float vb0 = qb - mb2;
        float vb = vb0 < 0.0f ? 0.0f : vb0;
        float sb = std::sqrt(vb);
        float e1 = mean - ma;
        float e2 = e1 * e1;
        float e3 = sd - sa;
        float e4 = e3 * e3;
        float da = e2 + e4;
        float g1 = mean - mb;
        float g2 = g1 * g1;
        float g3 = sd - sb;
        float g4 = g3 * g3;
        float db = g2 + g4;
        return da <= db ? 0u : 1u;
    }
};

BenchProgram make_activity(bool full) {
    BenchProgram b;
    b.name = full ? "activity" : "activity-small";
    b.source = kActivitySource;
    b.config = "events = boot, reboot, sleep, trainA, trainB, classify\n";
    Lcg rng;
    ArModel model;
    int per_class = full ? 128 : 8;
    int samples = full ? 24 : 6;
    for (int j = 0; j < per_class; ++j) {
        float v = 18.0f + static_cast<float>(rng.next() % 5);
        push_event(b.script, "feedA", f2b(v));
        model.train_a(v);
    }
    for (int j = 0; j < per_class; ++j) {
        float v = 26.0f + static_cast<float>(rng.next() % 7);
        push_event(b.script, "feedB", f2b(v));
        model.train_b(v);
    }
    for (int j = 0; j < samples; ++j) {
        bool first_half = j < samples / 2;
        float v = first_half ? 18.0f + static_cast<float>(rng.next() % 5)
                             : 26.0f + static_cast<float>(rng.next() % 7);
        push_event(b.script, "sample", f2b(v));
        b.expected.push_back(r_int(model.classify(v)));
    }
    return b;
}

IrProgram compile_bench(const BenchProgram& b, const std::string& extra_cfg) {
    VmConfig cfg = parse_config(b.config + extra_cfg);
    return compile_program(b.source, cfg);
}

std::string describe(const OutputRecord& r) {
    std::ostringstream os;
    os << (r.io ? "cmd " : "out ") << static_cast<int>(r.tag) << ":" << r.bits;
    return os.str();
}

}  // namespace

std::vector<BenchProgram> benchmark_suite() {
    std::vector<BenchProgram> v;
    v.push_back(make_bitcount(true));
    v.push_back(make_cuckoo(true));
    v.push_back(make_activity(true));
    v.push_back(make_sense(true));
    return v;
}

std::vector<BenchProgram> fuzz_suite() {
    std::vector<BenchProgram> v;
    v.push_back(make_war());
    v.push_back(make_atom(false));
    v.push_back(make_atom(true));
    v.push_back(make_sense(false));
    v.push_back(make_bitcount(false));
    v.push_back(make_cuckoo(false));
    v.push_back(make_activity(false));
    return v;
}

BenchOutcome run_bench(const BenchProgram& b, const std::string& extra_cfg, const PowerModel& pm) {
    BenchOutcome out;
    out.name = b.name;
    IrProgram prog = compile_bench(b, extra_cfg);
    out.backend = backend_name(prog.config.backend);
    bool fuse = prog.config.has_opt(Optimization::BlockFusion);
    bool loop = prog.config.has_opt(Optimization::LoopOpt);
    out.opt = loop ? "fusion+loop" : (fuse ? "fusion" : "none");
    PowerDriver power(pm);
    Engine eng(prog, power, b.script);
    bool invariant_broken = false;
    if (b.invariant)
        eng.on_commit = [&](const Engine& e) {
            if (!b.invariant(e)) invariant_broken = true;
        };
    out.rep = eng.run();
    if (!out.rep.halted) {
        out.detail = "did not halt: " + out.rep.trap;
        return out;
    }
    if (invariant_broken) {
        out.detail = "invariant '" + b.invariant_name + "' violated at a commit";
        return out;
    }
    if (out.rep.outputs != b.expected) {
        size_t n = std::min(out.rep.outputs.size(), b.expected.size());
        size_t at = n;
        for (size_t i = 0; i < n; ++i)
            if (!(out.rep.outputs[i] == b.expected[i])) {
                at = i;
                break;
            }
        std::ostringstream os;
        os << "output mismatch at record " << at << ": got ";
        os << (at < out.rep.outputs.size() ? describe(out.rep.outputs[at]) : std::string("none"));
        os << ", want ";
        os << (at < b.expected.size() ? describe(b.expected[at]) : std::string("none"));
        os << " (" << out.rep.outputs.size() << "/" << b.expected.size() << " records)";
        out.detail = os.str();
        return out;
    }
    out.ok = true;
    return out;
}

OptReport compare_optimizations(const BenchProgram& b) {
    OptReport rep;
    rep.name = b.name;
    struct Cfg {
        const char* label;
        const char* line;
    };
    const Cfg cfgs[] = {
        {"none", ""},
        {"fusion", "optimize = BLOCK_FUSION\n"},
        {"fusion+loop", "optimize = BLOCK_FUSION, LOOP_OPT\n"},
    };
    std::vector<std::vector<OutputRecord>> outs;
    for (const Cfg& c : cfgs) {
        BenchOutcome o = run_bench(b, c.line);
        if (!o.ok) {
            rep.detail = std::string(c.label) + ": " + o.detail;
            return rep;
        }
        OptRow row;
        row.label = c.label;
        row.txns = o.rep.txns;
        row.page_copies = o.rep.page_copies;
        row.stack_steps = o.rep.split.stack;
        row.steps = o.rep.steps;
        row.outputs_match = true;
        rep.rows.push_back(row);
        outs.push_back(o.rep.outputs);
    }
    for (size_t i = 1; i < outs.size(); ++i)
        if (outs[i] != outs[0]) {
            rep.detail = std::string(cfgs[i].label) + ": outputs differ from unoptimized run";
            return rep;
        }
    for (size_t i = 1; i < rep.rows.size(); ++i) {
        if (rep.rows[i].txns > rep.rows[i - 1].txns) {
            rep.detail = rep.rows[i].label + ": commit count increased";
            return rep;
        }
        if (rep.rows[i].page_copies > rep.rows[i - 1].page_copies) {
            rep.detail = rep.rows[i].label + ": page copy count increased";
            return rep;
        }
    }
    rep.ok = true;
    return rep;
}

PageReport compare_page_sizes(const BenchProgram& b, const std::vector<std::uint32_t>& sizes) {
    PageReport rep;
    rep.name = b.name;
    std::vector<std::vector<OutputRecord>> outs;
    for (std::uint32_t ps : sizes) {
        BenchOutcome o = run_bench(b, "page_size = " + std::to_string(ps) + "\n");
        if (!o.ok) {
            rep.detail = "page size " + std::to_string(ps) + ": " + o.detail;
            return rep;
        }
        PageRow row;
        row.page_size = ps;
        row.rep = o.rep;
        rep.rows.push_back(row);
        outs.push_back(o.rep.outputs);
    }
    for (size_t i = 1; i < outs.size(); ++i)
        if (outs[i] != outs[0]) {
            rep.detail = "page size " + std::to_string(rep.rows[i].page_size) +
                         ": outputs differ from page size " + std::to_string(rep.rows[0].page_size);
            return rep;
        }
    rep.ok = true;
    return rep;
}

std::string render_bench_table(const std::vector<BenchOutcome>& rows) {
    std::ostringstream os;
    auto cell = [&os](const std::string& s, size_t w) {
        os << s;
        for (size_t i = s.size(); i < w; ++i) os << ' ';
        os << "  ";
    };
    cell("name", 20);
    cell("backend", 11);
    cell("opt", 12);
    cell("commits", 9);
    cell("logged_pages", 12);
    cell("stack_ops", 9);
    cell("crashes", 7);
    os << "result\n";
    for (const BenchOutcome& r : rows) {
        cell(r.name, 20);
        cell(r.backend, 11);
        cell(r.opt, 12);
        cell(std::to_string(r.rep.txns), 9);
        cell(std::to_string(r.rep.page_copies), 12);
        cell(std::to_string(r.rep.split.stack), 9);
        cell(std::to_string(r.rep.reboots), 7);
        os << (r.ok ? "PASS" : "FAIL") << "\n";
        if (!r.ok) os << "    " << r.detail << "\n";
    }
    return os.str();
}

std::string render_opt_report(const OptReport& r) {
    std::ostringstream os;
    os << r.name << " optimization sweep: " << (r.ok ? "ok" : "FAIL") << "\n";
    for (const OptRow& row : r.rows) {
        os << "  " << row.label;
        for (size_t i = row.label.size(); i < 14; ++i) os << ' ';
        os << "commits=" << row.txns << " page_copies=" << row.page_copies
           << " stack_steps=" << row.stack_steps << " steps=" << row.steps << "\n";
    }
    if (!r.detail.empty()) os << "  " << r.detail << "\n";
    return os.str();
}

std::string render_page_report(const PageReport& r) {
    std::ostringstream os;
    os << r.name << " page size sweep: " << (r.ok ? "ok" : "FAIL") << "\n";
    for (const PageRow& row : r.rows) {
        os << "  page=" << row.page_size << "\tsteps=" << row.rep.steps
           << "\tcommits=" << row.rep.txns << "\tpage_copies=" << row.rep.page_copies
           << "\treads=" << row.rep.word_reads << "\twrites=" << row.rep.word_writes
           << "\tuseful=" << row.rep.split.useful << "\tundo=" << row.rep.split.undo << "\n";
    }
    if (!r.detail.empty()) os << "  " << r.detail << "\n";
    return os.str();
}

}  // namespace purevm
