#include "purevm/infer.hpp"

#include <algorithm>
#include <sstream>

#include "purevm/parser.hpp"

namespace purevm {

namespace {

bool is_scalar(const TypePtr& t) { return t->k == TypeTerm::K::Base; }

bool is_ground(const TypePtr& t) {
    std::vector<int> vars;
    collect_vars(t, vars);
    return vars.empty();
}

class Inference {
  public:
    explicit Inference(std::shared_ptr<SourceProgram> user) {
        tp_.user = std::move(user);
        tp_.prelude = std::make_shared<SourceProgram>(parse_program(prelude_source()));
        for (const auto& p : prim_catalog()) register_prim(p);
    }

    TypedProgram run() {
        for (auto& d : tp_.prelude->decls) process_decl(d);
        for (auto& d : tp_.user->decls) process_decl(d);
        return std::move(tp_);
    }

  private:
    TypedProgram tp_;
    int next_var_ = 100;

    TypePtr fresh() { return t_var(next_var_++); }

    void register_prim(const PrimInfo& p) {
        TypedCallable c;
        c.kind = DeclKind::Primitive;
        c.name = p.name;
        c.sig = p.sig;
        collect_vars(p.sig.flow, c.quant);
        for (const auto& t : p.sig.params) collect_vars(t, c.quant);
        collect_vars(p.sig.result, c.quant);
        c.flow_name = p.flow_name;
        c.param_names = p.param_names;
        c.io = p.io;
        c.write_flow = p.write_flow;
        c.result_is_flow = p.result_is_flow;
        c.op = p.op;
        add_callable(std::move(c), Pos{0, 0});
    }

    void add_callable(TypedCallable c, Pos where) {
        if (tp_.callable_index.count(c.name) || tp_.globals.count(c.name))
            throw TypeError(where, "duplicate declaration of '" + c.name + "'");
        tp_.callable_index[c.name] = tp_.callables.size();
        tp_.callables.push_back(std::move(c));
    }

    // ---- declaration processing ----------------------------------------

    void process_decl(Decl& d) {
        switch (d.kind) {
            case DeclKind::Global: process_global(d); break;
            case DeclKind::Primitive: process_primitive(d); break;
            case DeclKind::Func:
            case DeclKind::Event:
            case DeclKind::Interrupt: process_function(d); break;
        }
    }

    void process_global(const Decl& d) {
        if (tp_.callable_index.count(d.name) || tp_.globals.count(d.name))
            throw TypeError(d.span.begin, "duplicate declaration of '" + d.name + "'");
        std::map<std::string, int> scope;
        TypePtr t = convert_type(*d.global_type, scope);
        if (!is_ground(t))
            throw TypeError(d.global_type->span.begin, "global '" + d.name + "' must have a ground type");
        if (t->k == TypeTerm::K::Arrow)
            throw TypeError(d.global_type->span.begin, "globals cannot hold function values");
        if (t->k == TypeTerm::K::Array) {
            if (t->len < 1)
                throw TypeError(d.global_type->span.begin, "global array needs an explicit length");
            if (!is_scalar(t->elem) || t->elem->base == BaseType::Void)
                throw TypeError(d.global_type->span.begin,
                                "array elements must be Int, Float or Bool");
            if (d.global_init)
                throw TypeError(d.global_init->span.begin, "array globals cannot take an initializer");
        }
        if (is_scalar(t) && t->base == BaseType::Void)
            throw TypeError(d.global_type->span.begin, "a global cannot have type Void");
        if (d.global_init) {
            TypePtr lit = literal_type(*d.global_init);
            if (!lit)
                throw TypeError(d.global_init->span.begin, "global initializer must be a literal");
            if (!type_equal(lit, t))
                throw TypeError(d.global_init->span.begin,
                                "initializer type " + show_type(lit) + " does not match " + show_type(t));
        }
        GlobalInfo gi;
        gi.type = t;
        gi.decl = &d;
        gi.order = tp_.global_order.size();
        tp_.globals[d.name] = gi;
        tp_.global_order.push_back(d.name);
    }

    TypePtr literal_type(const Expr& e) {
        switch (e.kind) {
            case ExprKind::IntLit: return t_int();
            case ExprKind::FloatLit: return t_float();
            case ExprKind::BoolLit: return t_bool();
            default: return nullptr;
        }
    }

    void process_primitive(const Decl& d) {
        if (!d.body.empty())
            throw TypeError(d.span.begin, "primitive declarations cannot have a body");
        TypedCallable c;
        c.kind = DeclKind::Primitive;
        c.name = d.name;
        c.decl = &d;
        std::map<std::string, int> scope;
        c.sig.flow = annotated_type(*d.flow_in, scope);
        c.flow_name = d.flow_in->name;
        for (const auto& p : d.params) {
            c.sig.params.push_back(annotated_type(p, scope));
            c.param_names.push_back(p.name);
        }
        if (!d.flow_out)
            throw TypeError(d.span.begin, "primitive '" + d.name + "' needs an explicit flow-out type");
        c.sig.result = convert_type(*d.flow_out, scope);
        collect_vars(c.sig.flow, c.quant);
        for (const auto& t : c.sig.params) collect_vars(t, c.quant);
        collect_vars(c.sig.result, c.quant);
        c.io = d.meta.io;
        apply_write_meta(c, d);

        if (d.meta.builtin) {
            const PrimInfo* base = find_prim(d.name);
            if (!base)
                throw TypeError(d.span.begin, "'" + d.name + "' is not a built-in primitive");
            TypedCallable ours = c;
            ours.op = base->op;
            std::string want = show_builtin_line(*base);
            std::string got = show_callable(ours);
            if (want != got)
                throw TypeError(d.span.begin, "declaration '" + got +
                                                  "' does not match built-in '" + want + "'");
            // The catalog entry is already in scope; re-declaration is a
            // duplicate like any other.
        }
        add_callable(std::move(c), d.span.begin);
    }

    void apply_write_meta(TypedCallable& c, const Decl& d) {
        for (const auto& w : d.meta.writes) {
            if (d.flow_in && w == d.flow_in->name) {
                c.write_flow = true;
                c.result_is_flow = type_equal(c.sig.flow, c.sig.result);
                continue;
            }
            bool found = false;
            for (size_t i = 0; i < d.params.size(); ++i) {
                if (d.params[i].name == w) {
                    c.write_params.push_back(i);
                    found = true;
                    break;
                }
            }
            if (!found)
                throw TypeError(d.span.begin, "[write " + w + "] names no parameter of '" + d.name + "'");
        }
    }

    std::string show_builtin_line(const PrimInfo& p) {
        TypedCallable t;
        t.kind = DeclKind::Primitive;
        t.name = p.name;
        t.sig = p.sig;
        t.flow_name = p.flow_name;
        t.param_names = p.param_names;
        t.io = p.io;
        t.write_flow = p.write_flow;
        return show_callable(t);
    }

    // ---- function/handler bodies ---------------------------------------

    struct Scope {
        const Decl* decl;
        TypePtr flow;
        std::vector<TypePtr> params;
        TypePtr ret;
        std::map<std::string, TypePtr> locals;
        std::vector<const Expr*> exprs;  // for post-solve rewriting
        size_t self_index;
    };

    void process_function(Decl& d) {
        if (d.meta.builtin || d.meta.io || !d.meta.writes.empty())
            throw TypeError(d.span.begin, "metadata tags are only valid on primitive declarations");
        if (d.body.empty())
            throw TypeError(d.span.begin, "'" + d.name + "' has an empty body");

        std::map<std::string, int> type_scope;
        Scope sc;
        sc.decl = &d;
        sc.flow = annotated_type(*d.flow_in, type_scope);
        for (const auto& p : d.params) sc.params.push_back(annotated_type(p, type_scope));
        sc.ret = d.flow_out ? convert_type(*d.flow_out, type_scope) : fresh();

        // Self goes into scope as a monotype so tail recursion checks.
        TypedCallable self;
        self.kind = d.kind;
        self.name = d.name;
        self.decl = &d;
        self.sig.flow = sc.flow;
        self.sig.params = sc.params;
        self.sig.result = sc.ret;
        self.flow_name = d.flow_in->name;
        for (const auto& p : d.params) self.param_names.push_back(p.name);
        sc.self_index = tp_.callables.size();
        add_callable(std::move(self), d.span.begin);

        Subst s;
        if (d.kind == DeclKind::Event || d.kind == DeclKind::Interrupt)
            unify(sc.ret, t_void(), s, d.span.begin);

        if (d.kind == DeclKind::Interrupt) {
            infer_interrupt_body(d, sc, s);
        } else {
            TypePtr last = t_void();
            for (auto& stmt : d.body) last = infer_stmt(stmt, sc, s);
            unify(sc.ret, last, s, d.body.back().span.begin);
        }

        // Freeze the solution into the recorded expression types and the
        // signature, then quantify what remains free.
        TypedCallable& me = tp_.callables[sc.self_index];
        me.sig.flow = s.apply(sc.flow);
        for (auto& t : me.sig.params) t = s.apply(t);
        me.sig.result = s.apply(sc.ret);
        for (const Expr* e : sc.exprs) tp_.expr_type[e] = s.apply(tp_.expr_type[e]);
        collect_vars(me.sig.flow, me.quant);
        for (const auto& t : me.sig.params) collect_vars(t, me.quant);
        collect_vars(me.sig.result, me.quant);

        if (d.kind == DeclKind::Event || d.kind == DeclKind::Interrupt) {
            if (!me.quant.empty() || !is_ground(me.sig.flow))
                throw TypeError(d.span.begin, "handler '" + d.name + "' must have a ground type");
            if (!is_scalar(me.sig.flow))
                throw TypeError(d.span.begin,
                                "handler '" + d.name + "' must take a scalar flow-in payload");
        }
        compute_write_set(d, me);
    }

    void infer_interrupt_body(Decl& d, Scope& sc, Subst& s) {
        const char* shape =
            "an interrupt body must be a single 'value.addEventQ(handler)' statement";
        if (d.body.size() != 1 || d.body[0].binding) throw TypeError(d.span.begin, shape);
        Expr& e = *d.body[0].value;
        if (e.kind != ExprKind::Chain || e.calls.size() != 1 || e.calls[0].callee != "addEventQ")
            throw TypeError(d.body[0].span.begin, shape);
        if (e.calls[0].args.size() != 1 || e.calls[0].args[0]->kind != ExprKind::Ident)
            throw TypeError(e.calls[0].span.begin, "addEventQ takes exactly one event handler name");

        TypePtr payload = infer_expr(*e.head, sc, s);
        const std::string& target = e.calls[0].args[0]->ident;
        auto it = tp_.callable_index.find(target);
        if (it == tp_.callable_index.end() || tp_.callables[it->second].kind != DeclKind::Event)
            throw TypeError(e.calls[0].args[0]->span.begin,
                            "'" + target + "' is not an event handler");
        const TypedCallable& handler = tp_.callables[it->second];
        unify(payload, handler.sig.flow, s, e.head->span.begin);
        tp_.callables[sc.self_index].event_target = target;
        record(&e, t_void(), sc);
        record(e.calls[0].args[0].get(), handler.sig.flow, sc);
    }

    TypePtr infer_stmt(Stmt& stmt, Scope& sc, Subst& s) {
        TypePtr t = infer_expr(*stmt.value, sc, s);
        if (stmt.binding) {
            const std::string& n = *stmt.binding;
            if (sc.locals.count(n) || tp_.globals.count(n) || tp_.callable_index.count(n) ||
                n == sc.decl->flow_in->name ||
                std::any_of(sc.decl->params.begin(), sc.decl->params.end(),
                            [&](const Param& p) { return p.name == n; }))
                throw TypeError(stmt.span.begin, "binding '" + n + "' shadows an existing name");
            sc.locals[n] = t;
        }
        return t;
    }

    void record(const Expr* e, TypePtr t, Scope& sc) {
        tp_.expr_type[e] = std::move(t);
        sc.exprs.push_back(e);
    }

    TypePtr infer_expr(Expr& e, Scope& sc, Subst& s) {
        switch (e.kind) {
            case ExprKind::IntLit: record(&e, t_int(), sc); return t_int();
            case ExprKind::FloatLit: record(&e, t_float(), sc); return t_float();
            case ExprKind::BoolLit: record(&e, t_bool(), sc); return t_bool();
            case ExprKind::VoidLit: record(&e, t_void(), sc); return t_void();
            case ExprKind::Ident: {
                TypePtr t = infer_ident(e, sc, s);
                record(&e, t, sc);
                return t;
            }
            case ExprKind::Chain: {
                TypePtr t = infer_expr(*e.head, sc, s);
                for (auto& call : e.calls) t = infer_call(call, t, sc, s);
                record(&e, t, sc);
                return t;
            }
        }
        throw TypeError(e.span.begin, "unreachable expression kind");
    }

    TypePtr infer_ident(Expr& e, Scope& sc, Subst& s) {
        const std::string& n = e.ident;
        ResolvedIdent ri;
        if (auto it = sc.locals.find(n); it != sc.locals.end()) {
            ri.k = ResolvedIdent::K::Local;
            ri.name = n;
            tp_.ident_info[&e] = ri;
            return it->second;
        }
        if (n == sc.decl->flow_in->name) {
            ri.k = ResolvedIdent::K::Flow;
            tp_.ident_info[&e] = ri;
            return sc.flow;
        }
        for (size_t i = 0; i < sc.decl->params.size(); ++i) {
            if (sc.decl->params[i].name == n) {
                ri.k = ResolvedIdent::K::Param;
                ri.index = i;
                tp_.ident_info[&e] = ri;
                return sc.params[i];
            }
        }
        if (tp_.globals.count(n)) {
            ri.k = ResolvedIdent::K::Global;
            ri.name = n;
            tp_.ident_info[&e] = ri;
            return tp_.globals[n].type;
        }
        if (auto it = tp_.callable_index.find(n); it != tp_.callable_index.end()) {
            const TypedCallable& c = tp_.callables[it->second];
            if (c.kind == DeclKind::Event || c.kind == DeclKind::Interrupt)
                throw TypeError(e.span.begin, "handler '" + n + "' cannot be used as a value");
            if (!c.sig.params.empty())
                throw TypeError(e.span.begin,
                                "'" + n + "' takes parameters and cannot be passed as a value");
            ri.k = ResolvedIdent::K::Callable;
            ri.index = it->second;
            tp_.ident_info[&e] = ri;
            CallableSig inst = instantiate(c, s);
            return t_arrow(inst.flow, inst.result);
        }
        if (n == "addEventQ")
            throw TypeError(e.span.begin, "addEventQ is only available inside interrupt handlers");
        throw TypeError(e.span.begin, "unbound name '" + n + "'");
    }

    TypePtr infer_call(CallElem& call, TypePtr flow, Scope& sc, Subst& s) {
        if (call.callee == "addEventQ")
            throw TypeError(call.span.begin, "addEventQ is only available inside interrupt handlers");
        size_t idx;
        const TypedCallable* c;
        if (auto it = tp_.callable_index.find(call.callee); it != tp_.callable_index.end()) {
            idx = it->second;
            c = &tp_.callables[idx];
        } else {
            throw TypeError(call.span.begin, "unbound name '" + call.callee + "'");
        }
        if (c->kind == DeclKind::Event || c->kind == DeclKind::Interrupt)
            throw TypeError(call.span.begin, "handler '" + call.callee + "' cannot be called directly");
        if (call.args.size() != c->sig.params.size())
            throw TypeError(call.span.begin, "'" + call.callee + "' expects " +
                                                 std::to_string(c->sig.params.size()) +
                                                 " parameter(s), got " +
                                                 std::to_string(call.args.size()));
        CallableSig inst = instantiate(*c, s);
        unify(inst.flow, flow, s, call.span.begin);
        for (size_t i = 0; i < call.args.size(); ++i) {
            TypePtr at = infer_expr(*call.args[i], sc, s);
            unify(inst.params[i], at, s, call.args[i]->span.begin);
        }
        tp_.call_target[&call] = idx;
        return inst.result;
    }

    CallableSig instantiate(const TypedCallable& c, Subst&) {
        if (c.quant.empty()) return c.sig;
        Subst inst;
        for (int v : c.quant) inst.bind(v, fresh(), Pos{0, 0});
        CallableSig out;
        out.flow = inst.apply(c.sig.flow);
        for (const auto& p : c.sig.params) out.params.push_back(inst.apply(p));
        out.result = inst.apply(c.sig.result);
        return out;
    }

    // ---- write-set propagation -----------------------------------------

    struct FlowSym {
        enum class K { Flow, Param, Global, Other } k = K::Other;
        size_t index = 0;
        std::string name;
    };

    void note_write(const FlowSym& sym, TypedCallable& me) {
        switch (sym.k) {
            case FlowSym::K::Flow: me.write_flow = true; break;
            case FlowSym::K::Param:
                if (std::find(me.write_params.begin(), me.write_params.end(), sym.index) ==
                    me.write_params.end())
                    me.write_params.push_back(sym.index);
                break;
            case FlowSym::K::Global: me.write_globals.insert(sym.name); break;
            case FlowSym::K::Other: break;
        }
    }

    FlowSym sym_of(const Expr& e) {
        FlowSym sym;
        if (e.kind != ExprKind::Ident) return sym;
        auto it = tp_.ident_info.find(&e);
        if (it == tp_.ident_info.end()) return sym;
        switch (it->second.k) {
            case ResolvedIdent::K::Flow: sym.k = FlowSym::K::Flow; break;
            case ResolvedIdent::K::Param:
                sym.k = FlowSym::K::Param;
                sym.index = it->second.index;
                break;
            case ResolvedIdent::K::Global:
                sym.k = FlowSym::K::Global;
                sym.name = it->second.name;
                break;
            default: break;
        }
        return sym;
    }

    void compute_write_set(const Decl& d, TypedCallable& me) {
        if (d.kind == DeclKind::Interrupt) return;
        for (const auto& stmt : d.body) walk_writes(*stmt.value, me);
    }

    void walk_writes(const Expr& e, TypedCallable& me) {
        if (e.kind != ExprKind::Chain) return;
        FlowSym cur = sym_of(*e.head);
        for (const auto& call : e.calls) {
            for (const auto& a : call.args) walk_writes(*a, me);
            auto it = tp_.call_target.find(&call);
            if (it == tp_.call_target.end()) continue;
            const TypedCallable& callee = tp_.callables[it->second];
            if (callee.write_flow) note_write(cur, me);
            for (const auto& g : callee.write_globals) me.write_globals.insert(g);
            for (size_t pi : callee.write_params) {
                if (pi < call.args.size()) note_write(sym_of(*call.args[pi]), me);
            }
            if (!callee.result_is_flow) cur = FlowSym{};
        }
    }

    // ---- surface type conversion ---------------------------------------

    TypePtr annotated_type(const Param& p, std::map<std::string, int>& scope) {
        if (!p.type) return fresh();
        return convert_type(*p.type, scope);
    }

    TypePtr convert_type(const TypeExpr& t, std::map<std::string, int>& scope) {
        switch (t.kind) {
            case TypeKind::Named: {
                if (t.name == "Int") return t_int();
                if (t.name == "Float") return t_float();
                if (t.name == "Bool") return t_bool();
                if (t.name == "Void") return t_void();
                throw TypeError(t.span.begin, "unknown type '" + t.name + "'");
            }
            case TypeKind::Var: {
                auto it = scope.find(t.name);
                if (it == scope.end()) {
                    int id = next_var_++;
                    scope[t.name] = id;
                    return t_var(id);
                }
                return t_var(it->second);
            }
            case TypeKind::Arrow:
                return t_arrow(convert_type(*t.from, scope), convert_type(*t.to, scope));
            case TypeKind::Array:
                return t_array(convert_type(*t.elem, scope), t.length);
        }
        throw TypeError(t.span.begin, "unreachable type kind");
    }
};

}  // namespace

TypedProgram infer_program(std::shared_ptr<SourceProgram> user) {
    Inference inf(std::move(user));
    return inf.run();
}

std::string show_callable(const TypedCallable& c) {
    std::map<int, std::string> names;
    std::ostringstream os;
    switch (c.kind) {
        case DeclKind::Primitive: os << "primitive "; break;
        case DeclKind::Func: os << "func "; break;
        case DeclKind::Event: os << "event "; break;
        case DeclKind::Interrupt: os << "interrupt "; break;
        case DeclKind::Global: break;
    }
    os << c.name << "(" << (c.flow_name.empty() ? "x" : c.flow_name) << ": "
       << show_type(c.sig.flow, names) << ")";
    os << "(";
    for (size_t i = 0; i < c.sig.params.size(); ++i) {
        if (i) os << ", ";
        os << (i < c.param_names.size() ? c.param_names[i] : "p" + std::to_string(i)) << ": "
           << show_type(c.sig.params[i], names);
    }
    os << ") -> " << show_type(c.sig.result, names);
    if (c.io) os << " [IO]";
    if (c.write_flow) os << " [write " << (c.flow_name.empty() ? "x" : c.flow_name) << "]";
    for (size_t pi : c.write_params)
        if (pi < c.param_names.size()) os << " [write " << c.param_names[pi] << "]";
    return os.str();
}

std::string check_listing(const TypedProgram& tp) {
    std::ostringstream os;
    // Callables are already in declaration order: catalog, library, user.
    // Globals are interleaved by declaration order of the user program.
    size_t next_global = 0;
    auto flush_globals_before = [&](const Decl* d) {
        while (next_global < tp.global_order.size()) {
            const GlobalInfo& gi = tp.globals.at(tp.global_order[next_global]);
            if (d != nullptr && gi.decl->span.begin.line >= d->span.begin.line) break;
            os << "global " << tp.global_order[next_global] << ": " << show_type(gi.type) << "\n";
            ++next_global;
        }
    };
    for (const auto& c : tp.callables) {
        bool user_decl = false;
        if (c.decl) {
            for (const auto& d : tp.user->decls)
                if (&d == c.decl) user_decl = true;
        }
        if (user_decl) flush_globals_before(c.decl);
        os << show_callable(c) << "\n";
    }
    flush_globals_before(nullptr);
    return os.str();
}

}  // namespace purevm
