#include "purevm/lower.hpp"

#include <bit>
#include <cstring>
#include <map>
#include <set>
#include <tuple>

#include "purevm/parser.hpp"
#include "purevm/transform.hpp"

namespace purevm {

namespace {

ValTag tag_of(const TypePtr& t) {
    if (!t || t->k != TypeTerm::K::Base) return ValTag::Unknown;
    switch (t->base) {
        case BaseType::Int: return ValTag::Int;
        case BaseType::Float: return ValTag::Float;
        case BaseType::Bool: return ValTag::Bool;
        case BaseType::Void: return ValTag::Void;
    }
    return ValTag::Unknown;
}

std::uint32_t float_bits(float f) { return std::bit_cast<std::uint32_t>(f); }

// Compile-time value lattice for function and array operands. A Phi keeps
// both candidates and the condition cell; applying one branches.
struct StaticVal {
    enum class K { Fn, Arr, Phi } k = K::Fn;
    size_t fn = 0;
    std::uint16_t arr = 0;
    Slot cond = kNoSlot;
    int a = -1;
    int b = -1;
};

struct CVal {
    enum class K { Slot, Static, Tail } k = K::Slot;
    Slot slot = kNoSlot;
    int st = -1;

    static CVal of_slot(Slot s) { return {K::Slot, s, -1}; }
    static CVal of_static(int id) { return {K::Static, kNoSlot, id}; }
    static CVal tail() { return {K::Tail, kNoSlot, -1}; }
};

struct SpecInst {
    BlockId entry = 0;
    CVal flow;
    std::vector<CVal> params;
    bool done = false;
    std::string label;
};

struct Env {
    const Decl* decl = nullptr;
    CVal flow;
    std::vector<CVal> params;
    std::map<std::string, CVal> locals;
    std::string label;
    int blocks = 0;
    int temps = 0;
};

class Lowerer {
  public:
    Lowerer(const TypedProgram& tp, const VmConfig& cfg) : tp_(tp) { out_.config = cfg; }

    IrProgram run() {
        CellInfo flow_cell;
        flow_cell.name = "flow";
        out_.cells.push_back(flow_cell);

        register_globals();
        void_lit_ = literal(ValTag::Void, 0);

        for (const auto& c : tp_.callables) {
            if (c.kind != DeclKind::Event) continue;
            if (out_.event_id(c.name) < 0)
                throw LowerError(c.decl->span.begin,
                                 "event '" + c.name + "' is not listed in the configuration");
        }

        out_.handlers.resize(out_.config.events.size());
        for (size_t i = 0; i < out_.config.events.size(); ++i)
            lower_handler(static_cast<std::uint16_t>(i), out_.config.events[i]);

        for (size_t i = 0; i < tp_.callables.size(); ++i) {
            const TypedCallable& c = tp_.callables[i];
            if (c.kind != DeclKind::Interrupt) continue;
            int ev = out_.event_id(c.event_target);
            if (ev < 0)
                throw LowerError(c.decl->span.begin, "interrupt '" + c.name +
                                                         "' targets event '" + c.event_target +
                                                         "' which is not configured");
            out_.interrupts.emplace_back(c.name, static_cast<std::uint16_t>(ev));
        }

        finalize();
        return out_;
    }

  private:
    const TypedProgram& tp_;
    IrProgram out_;
    BlockId cur_ = 0;
    Slot void_lit_ = 0;

    std::map<std::string, Slot> scalar_slot_;
    std::map<std::string, std::uint16_t> array_id_;
    std::vector<std::pair<Slot, std::uint32_t>> init_bits_;

    std::vector<StaticVal> statics_;
    std::map<std::tuple<int, long, long, long, long>, int> static_canon_;

    std::map<std::pair<ValTag, std::uint32_t>, Slot> literal_pool_;
    std::map<std::pair<size_t, std::vector<int>>, SpecInst> specs_;
    std::map<std::string, int> spec_counts_;

    // ---- cells and statics ---------------------------------------------

    Slot alloc_cell(std::string name, ValTag tag, bool lit = false) {
        if (out_.cells.size() >= 0xFFFE) throw LowerError(Pos{0, 0}, "too many cells");
        CellInfo c;
        c.tag = tag;
        c.name = std::move(name);
        c.literal = lit;
        out_.cells.push_back(std::move(c));
        return static_cast<Slot>(out_.cells.size() - 1);
    }

    Slot temp(Env& env, ValTag tag) {
        return alloc_cell(env.label + ".t" + std::to_string(env.temps++), tag);
    }

    Slot literal(ValTag tag, std::uint32_t bits) {
        auto key = std::make_pair(tag, bits);
        auto it = literal_pool_.find(key);
        if (it != literal_pool_.end()) return it->second;
        Slot s = alloc_cell("lit." + std::to_string(literal_pool_.size()), tag, true);
        literal_pool_[key] = s;
        init_bits_.emplace_back(s, bits);
        return s;
    }

    int intern(const StaticVal& v) {
        auto key = std::make_tuple(static_cast<int>(v.k), static_cast<long>(v.fn),
                                   static_cast<long>(v.arr), static_cast<long>(v.cond),
                                   static_cast<long>(v.a) * 0x10000 + v.b);
        auto it = static_canon_.find(key);
        if (it != static_canon_.end()) return it->second;
        statics_.push_back(v);
        int id = static_cast<int>(statics_.size() - 1);
        static_canon_[key] = id;
        return id;
    }

    int mk_fn(size_t idx) { return intern({StaticVal::K::Fn, idx, 0, kNoSlot, -1, -1}); }
    int mk_arr(std::uint16_t a) { return intern({StaticVal::K::Arr, 0, a, kNoSlot, -1, -1}); }
    int mk_phi(Slot cond, int a, int b) {
        return intern({StaticVal::K::Phi, 0, 0, cond, a, b});
    }

    void register_globals() {
        for (const auto& name : tp_.global_order) {
            const GlobalInfo& g = tp_.globals.at(name);
            if (g.type->k == TypeTerm::K::Array) {
                ArrayInfo a;
                a.len = static_cast<std::uint32_t>(g.type->len);
                a.tag = tag_of(g.type->elem);
                a.name = name;
                out_.arrays.push_back(a);
                array_id_[name] = static_cast<std::uint16_t>(out_.arrays.size() - 1);
            } else {
                Slot s = alloc_cell(name, tag_of(g.type));
                scalar_slot_[name] = s;
                out_.global_slots.emplace_back(name, s);
                if (g.decl && g.decl->global_init) init_bits_.emplace_back(s, expr_bits(*g.decl->global_init));
            }
        }
    }

    std::uint32_t expr_bits(const Expr& e) {
        switch (e.kind) {
            case ExprKind::IntLit:
                return static_cast<std::uint32_t>(static_cast<std::int32_t>(e.int_value));
            case ExprKind::FloatLit: return float_bits(e.float_value);
            case ExprKind::BoolLit: return e.bool_value ? 1u : 0u;
            default: return 0;
        }
    }

    // ---- block plumbing ------------------------------------------------

    BlockId new_block(std::string label) {
        if (out_.blocks.size() >= 0xFFFF) throw LowerError(Pos{0, 0}, "too many blocks");
        Block b;
        b.label = std::move(label);
        b.term.slot = kNoSlot;
        out_.blocks.push_back(std::move(b));
        return static_cast<BlockId>(out_.blocks.size() - 1);
    }

    void emit(const CallIns& ins) { out_.blocks[cur_].instrs.push_back(ins); }

    void emit_move(Slot src, Slot dst) {
        if (src == dst) return;
        CallIns m;
        m.op = PrimOp::Move;
        m.flow = src;
        m.result = dst;
        m.tag = out_.cells[src].tag;
        emit(m);
    }

    void set_term(Terminator t) {
        Block& b = out_.blocks[cur_];
        if (b.term.slot != kNoSlot || !b.term.conts.empty() || b.term.kind != TermKind::Return)
            throw LowerError(Pos{0, 0}, "block terminated twice");
        b.term = std::move(t);
    }

    void term_return(Slot s) {
        Terminator t;
        t.kind = TermKind::Return;
        t.slot = s;
        set_term(std::move(t));
    }

    void term_push(std::vector<BlockId> conts, bool loop_back = false) {
        Terminator t;
        t.kind = TermKind::PushCont;
        t.conts = std::move(conts);
        t.loop_back = loop_back;
        set_term(std::move(t));
    }

    void term_select(Slot cond, BlockId then_b, BlockId else_b) {
        Terminator t;
        t.kind = TermKind::SelectCont;
        t.slot = cond;
        t.then_block = then_b;
        t.else_block = else_b;
        set_term(std::move(t));
    }

    // ---- specialization ------------------------------------------------

    SpecInst& get_spec(size_t cidx, const std::vector<int>& bindings, Slot fixed_flow = kNoSlot) {
        auto key = std::make_pair(cidx, bindings);
        auto it = specs_.find(key);
        if (it != specs_.end()) return it->second;

        const TypedCallable& c = tp_.callables[cidx];
        if (!c.decl) throw LowerError(Pos{0, 0}, "cannot specialize a built-in");

        SpecInst inst;
        int n = spec_counts_[c.name]++;
        inst.label = n == 0 ? c.name : c.name + "#" + std::to_string(n);
        inst.entry = new_block(inst.label);

        Env env;
        env.decl = c.decl;
        env.label = inst.label;
        if (bindings[0] >= 0)
            inst.flow = CVal::of_static(bindings[0]);
        else if (fixed_flow != kNoSlot)
            inst.flow = CVal::of_slot(fixed_flow);
        else
            inst.flow = CVal::of_slot(
                alloc_cell(inst.label + "." + c.decl->flow_in->name, tag_of(c.sig.flow)));
        for (size_t i = 0; i < c.sig.params.size(); ++i) {
            if (bindings[i + 1] >= 0)
                inst.params.push_back(CVal::of_static(bindings[i + 1]));
            else
                inst.params.push_back(CVal::of_slot(alloc_cell(
                    inst.label + "." + c.decl->params[i].name, tag_of(c.sig.params[i]))));
        }
        env.flow = inst.flow;
        env.params = inst.params;

        SpecInst& stored = specs_[key] = std::move(inst);

        BlockId saved = cur_;
        cur_ = stored.entry;
        lower_body(*c.decl, env);
        cur_ = saved;
        stored.done = true;
        return stored;
    }

    void lower_handler(std::uint16_t id, const std::string& event) {
        const TypedCallable* c = tp_.find(event);
        if (!c || c->kind != DeclKind::Event)
            throw LowerError(Pos{0, 0}, "configured event '" + event + "' has no handler");
        size_t cidx = tp_.callable_index.at(event);
        Slot payload = alloc_cell("payload." + event, tag_of(c->sig.flow));
        SpecInst& inst = get_spec(cidx, {-1}, payload);
        HandlerInfo h;
        h.entry = inst.entry;
        h.payload = payload;
        h.payload_tag = tag_of(c->sig.flow);
        h.name = event;
        out_.handlers[id] = h;
    }

    void lower_body(const Decl& d, Env& env) {
        CVal last = CVal::of_slot(void_lit_);
        Pos end = d.span.end;
        for (size_t i = 0; i < d.body.size(); ++i) {
            const Stmt& st = d.body[i];
            bool tail = i + 1 == d.body.size();
            CVal v = lower_expr(*st.value, env, tail);
            if (st.binding) env.locals[*st.binding] = v;
            last = v;
            end = st.span.begin;
        }
        switch (last.k) {
            case CVal::K::Tail: return;
            case CVal::K::Slot: term_return(last.slot); return;
            case CVal::K::Static:
                throw LowerError(end, "a function cannot return a function or array value");
        }
    }

    // ---- expressions ---------------------------------------------------

    CVal lower_expr(const Expr& e, Env& env, bool tail) {
        switch (e.kind) {
            case ExprKind::IntLit:
                return CVal::of_slot(literal(
                    ValTag::Int,
                    static_cast<std::uint32_t>(static_cast<std::int32_t>(e.int_value))));
            case ExprKind::FloatLit:
                return CVal::of_slot(literal(ValTag::Float, float_bits(e.float_value)));
            case ExprKind::BoolLit:
                return CVal::of_slot(literal(ValTag::Bool, e.bool_value ? 1u : 0u));
            case ExprKind::VoidLit: return CVal::of_slot(void_lit_);
            case ExprKind::Ident: return lower_ident(e, env);
            case ExprKind::Chain: {
                CVal v = lower_expr(*e.head, env, false);
                for (size_t j = 0; j < e.calls.size(); ++j) {
                    bool last = j + 1 == e.calls.size();
                    v = lower_call(e.calls[j], v, env, tail && last);
                    if (v.k == CVal::K::Tail) return v;
                }
                return v;
            }
        }
        throw LowerError(e.span.begin, "unreachable expression kind");
    }

    CVal lower_ident(const Expr& e, Env& env) {
        const ResolvedIdent& ri = tp_.ident_info.at(&e);
        switch (ri.k) {
            case ResolvedIdent::K::Flow: return env.flow;
            case ResolvedIdent::K::Param: return env.params.at(ri.index);
            case ResolvedIdent::K::Local: return env.locals.at(ri.name);
            case ResolvedIdent::K::Global: {
                auto it = scalar_slot_.find(ri.name);
                if (it != scalar_slot_.end()) return CVal::of_slot(it->second);
                return CVal::of_static(mk_arr(array_id_.at(ri.name)));
            }
            case ResolvedIdent::K::Callable: return CVal::of_static(mk_fn(ri.index));
        }
        throw LowerError(e.span.begin, "unreachable identifier kind");
    }

    CVal lower_call(const CallElem& call, CVal flow, Env& env, bool tail) {
        const size_t cidx = tp_.call_target.at(&call);
        const TypedCallable& c = tp_.callables[cidx];

        std::vector<CVal> args;
        for (const auto& a : call.args) args.push_back(lower_expr(*a, env, false));

        if (c.kind == DeclKind::Primitive)
            return lower_prim(c, flow, args, call, env, tail);
        return lower_user(cidx, flow, args, env, tail, call.span.begin);
    }

    ValTag eq_tag(const CallElem& call) {
        auto it = tp_.expr_type.find(call.args[0].get());
        if (it != tp_.expr_type.end() && tag_of(it->second) == ValTag::Float)
            return ValTag::Float;
        return ValTag::Int;
    }

    CVal lower_prim(const TypedCallable& c, CVal flow, std::vector<CVal>& args,
                    const CallElem& call, Env& env, bool tail) {
        const Pos pos = call.span.begin;
        switch (c.op) {
            case PrimOp::Apply: {
                if (args[0].k != CVal::K::Static)
                    throw LowerError(pos, "applied value must be a statically known function");
                return lower_apply(flow, args[0].st, env, tail, pos);
            }
            case PrimOp::Select: {
                if (args[0].k == CVal::K::Static || args[1].k == CVal::K::Static) {
                    if (args[0].k != args[1].k)
                        throw LowerError(pos, "select branches must have the same kind");
                    if (flow.k != CVal::K::Slot)
                        throw LowerError(pos, "select condition must be a data value");
                    return CVal::of_static(mk_phi(flow.slot, args[0].st, args[1].st));
                }
                if (flow.k != CVal::K::Slot)
                    throw LowerError(pos, "select condition must be a data value");
                CallIns ins;
                ins.op = PrimOp::Select;
                ins.flow = flow.slot;
                ins.a = args[0].slot;
                ins.b = args[1].slot;
                ins.tag = out_.cells[ins.a].tag;
                ins.result = temp(env, ins.tag);
                emit(ins);
                return CVal::of_slot(ins.result);
            }
            case PrimOp::GetAt: {
                std::uint16_t arr = need_array(flow, pos);
                CallIns ins;
                ins.op = PrimOp::GetAt;
                ins.array = arr;
                ins.a = need_slot(args[0], pos);
                ins.tag = out_.arrays[arr].tag;
                ins.result = temp(env, ins.tag);
                emit(ins);
                return CVal::of_slot(ins.result);
            }
            case PrimOp::SetAt: {
                std::uint16_t arr = need_array(flow, pos);
                CallIns ins;
                ins.op = PrimOp::SetAt;
                ins.array = arr;
                ins.a = need_slot(args[0], pos);
                ins.b = need_slot(args[1], pos);
                ins.tag = out_.arrays[arr].tag;
                emit(ins);
                return flow;
            }
            case PrimOp::Len: {
                std::uint16_t arr = need_array(flow, pos);
                return CVal::of_slot(literal(ValTag::Int, out_.arrays[arr].len));
            }
            case PrimOp::ToVoid:
                // Discards anything, including functions and arrays.
                return CVal::of_slot(void_lit_);
            default: break;
        }

        Slot f = need_slot(flow, pos);
        if (c.write_flow && out_.cells[f].literal) {
            Slot t = temp(env, out_.cells[f].tag);
            emit_move(f, t);
            f = t;
        }
        CallIns ins;
        ins.op = c.op;
        ins.flow = f;
        if (!args.empty()) ins.a = need_slot(args[0], pos);
        if (args.size() > 1) ins.b = need_slot(args[1], pos);
        if (c.op == PrimOp::Eq || c.op == PrimOp::Ne)
            ins.tag = call.args.empty() ? ValTag::Int : eq_tag(call);
        else if (c.op == PrimOp::Emit || c.op == PrimOp::SendCmd)
            ins.tag = out_.cells[f].tag;
        else
            ins.tag = tag_of(c.sig.result);
        if (c.result_is_flow)
            ins.result = f;
        else
            ins.result = temp(env, tag_of(c.sig.result));
        emit(ins);
        return CVal::of_slot(ins.result);
    }

    // Applying a primitive passed as a value: it takes no data parameters.
    CVal apply_prim(size_t cidx, CVal flow, Env& env, Pos pos) {
        const TypedCallable& c = tp_.callables[cidx];
        std::vector<CVal> args;
        CallElem dummy;
        dummy.span.begin = pos;
        return lower_prim(c, flow, args, dummy, env, false);
    }

    CVal lower_apply(CVal flow, int st_id, Env& env, bool tail, Pos pos) {
        const StaticVal st = statics_[st_id];
        switch (st.k) {
            case StaticVal::K::Arr:
                throw LowerError(pos, "an array cannot be applied as a function");
            case StaticVal::K::Fn: {
                const TypedCallable& c = tp_.callables[st.fn];
                if (c.kind == DeclKind::Primitive) {
                    CVal v = apply_prim(st.fn, flow, env, pos);
                    if (!tail) return v;
                    if (v.k != CVal::K::Slot)
                        throw LowerError(pos, "a function cannot return a function or array value");
                    term_return(v.slot);
                    return CVal::tail();
                }
                std::vector<CVal> no_args;
                return lower_user(st.fn, flow, no_args, env, tail, pos);
            }
            case StaticVal::K::Phi: {
                BlockId then_b = new_block(env.label + ".a" + std::to_string(env.blocks++));
                BlockId else_b = new_block(env.label + ".a" + std::to_string(env.blocks++));
                term_select(st.cond, then_b, else_b);
                if (tail) {
                    cur_ = then_b;
                    lower_apply(flow, st.a, env, true, pos);
                    cur_ = else_b;
                    lower_apply(flow, st.b, env, true, pos);
                    return CVal::tail();
                }
                BlockId join = new_block(env.label + ".j" + std::to_string(env.blocks++));
                for (auto [arm_block, arm] : {std::pair{then_b, st.a}, std::pair{else_b, st.b}}) {
                    cur_ = arm_block;
                    CVal v = lower_apply(flow, arm, env, false, pos);
                    if (v.k != CVal::K::Slot)
                        throw LowerError(pos, "function-valued branches must be applied in tail position");
                    emit_move(v.slot, kFlowSlot);
                    term_push({join});
                }
                cur_ = join;
                Slot t = temp(env, ValTag::Unknown);
                emit_move(kFlowSlot, t);
                return CVal::of_slot(t);
            }
        }
        throw LowerError(pos, "unreachable static kind");
    }

    CVal lower_user(size_t cidx, CVal flow, std::vector<CVal>& args, Env& env, bool tail,
                    Pos pos) {
        const TypedCallable& c = tp_.callables[cidx];
        if (c.kind == DeclKind::Event || c.kind == DeclKind::Interrupt)
            throw LowerError(pos, "handlers cannot be called");

        std::vector<int> bindings;
        bindings.push_back(flow.k == CVal::K::Static ? flow.st : -1);
        for (const CVal& a : args) bindings.push_back(a.k == CVal::K::Static ? a.st : -1);

        SpecInst& inst = get_spec(cidx, bindings);

        // Dynamic argument copies, staged through temps when a source cell
        // is also a destination (recursive calls reuse parameter cells).
        std::vector<std::pair<Slot, Slot>> moves;
        if (flow.k == CVal::K::Slot && inst.flow.k == CVal::K::Slot && flow.slot != inst.flow.slot)
            moves.emplace_back(flow.slot, inst.flow.slot);
        for (size_t i = 0; i < args.size(); ++i)
            if (args[i].k == CVal::K::Slot && inst.params[i].k == CVal::K::Slot &&
                args[i].slot != inst.params[i].slot)
                moves.emplace_back(args[i].slot, inst.params[i].slot);
        std::set<Slot> dests;
        for (auto& [src, dst] : moves) dests.insert(dst);
        bool clash = false;
        for (auto& [src, dst] : moves) clash = clash || dests.count(src) != 0;
        if (clash) {
            for (auto& [src, dst] : moves) {
                Slot t = temp(env, out_.cells[src].tag);
                emit_move(src, t);
                src = t;
            }
        }
        for (auto& [src, dst] : moves) emit_move(src, dst);

        if (tail) {
            term_push({inst.entry}, !inst.done);
            return CVal::tail();
        }
        if (!inst.done)
            throw LowerError(pos, "recursive call to '" + c.name + "' must be in tail position");
        BlockId rest = new_block(env.label + ".r" + std::to_string(env.blocks++));
        term_push({inst.entry, rest});
        cur_ = rest;
        Slot t = temp(env, tag_of(c.sig.result));
        emit_move(kFlowSlot, t);
        return CVal::of_slot(t);
    }

    std::uint16_t need_array(const CVal& v, Pos pos) {
        if (v.k != CVal::K::Static || statics_[v.st].k != StaticVal::K::Arr)
            throw LowerError(pos, "array operations need a named global array");
        return statics_[v.st].arr;
    }

    Slot need_slot(const CVal& v, Pos pos) {
        if (v.k != CVal::K::Slot)
            throw LowerError(pos, "expected a data value, found a function or array");
        return v.slot;
    }

    // ---- memory layout -------------------------------------------------

    void finalize() {
        Layout& L = out_.layout;
        const VmConfig& cfg = out_.config;
        const std::uint32_t P = cfg.page_size;
        auto page_span = [P](std::uint32_t words) { return (words + P - 1) / P * P; };

        L.page_size = P;
        L.runtime_base = 0;
        L.stack_base = L.runtime_base + page_span(Layout::kRuntimeWords);
        L.stack_frames = cfg.stack_depth;
        L.queue_base = L.stack_base + page_span(L.stack_frames);
        L.queue_slots = cfg.queue_capacity + 2;
        L.globals_base = L.queue_base + 2 * P + page_span(4 * L.queue_slots);

        Addr addr = L.globals_base;
        for (auto& a : out_.arrays) {
            a.base = addr;
            addr += 2 * a.len;
        }
        for (size_t i = 1; i < out_.cells.size(); ++i) {
            out_.cells[i].addr = addr;
            addr += 2;
        }
        L.globals_words = addr - L.globals_base;
        L.undo_base = L.globals_base + page_span(L.globals_words);
        L.undo_entries = std::max<std::uint32_t>(16, 8 + 4 * cfg.loop_unroll);
        L.total_words = L.undo_base + 1 + L.undo_entries * (2 + P);
        if (L.total_words > cfg.nvm_size)
            throw LowerError(Pos{0, 0}, "memory layout needs " + std::to_string(L.total_words) +
                                            " words but nvm_size is " +
                                            std::to_string(cfg.nvm_size));

        out_.cells[kFlowSlot].addr = L.flow_addr();

        out_.image.assign(cfg.nvm_size, 0);
        for (auto [slot, bits] : init_bits_) {
            Addr a = out_.cells[slot].addr;
            out_.image[a] = static_cast<Word>(bits & 0xFFFF);
            out_.image[a + 1] = static_cast<Word>(bits >> 16);
        }
    }
};

}  // namespace

IrProgram lower_program(const TypedProgram& tp, const VmConfig& cfg) {
    Lowerer l(tp, cfg);
    return l.run();
}

IrProgram compile_program(const std::string& source, const VmConfig& cfg) {
    TypedProgram tp = infer_program(std::make_shared<SourceProgram>(parse_program(source)));
    IrProgram p = lower_program(tp, cfg);
    if (cfg.has_opt(Optimization::BlockFusion)) fuse_blocks(p);
    validate_ir(p);
    return p;
}

}  // namespace purevm
