#include "purevm/ast.hpp"

#include <cstdio>
#include <sstream>

namespace purevm {

TypeExprPtr named_type(const std::string& n) {
    auto t = std::make_shared<TypeExpr>();
    t->kind = TypeKind::Named;
    t->name = n;
    return t;
}

TypeExprPtr var_type(const std::string& n) {
    auto t = std::make_shared<TypeExpr>();
    t->kind = TypeKind::Var;
    t->name = n;
    return t;
}

TypeExprPtr arrow_type(TypeExprPtr a, TypeExprPtr b) {
    auto t = std::make_shared<TypeExpr>();
    t->kind = TypeKind::Arrow;
    t->from = std::move(a);
    t->to = std::move(b);
    return t;
}

TypeExprPtr array_type(TypeExprPtr elem, long len) {
    auto t = std::make_shared<TypeExpr>();
    t->kind = TypeKind::Array;
    t->elem = std::move(elem);
    t->length = len;
    return t;
}

bool type_expr_equal(const TypeExpr* a, const TypeExpr* b) {
    if (a == nullptr || b == nullptr) return a == b;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case TypeKind::Named:
        case TypeKind::Var:
            return a->name == b->name;
        case TypeKind::Arrow:
            return type_expr_equal(a->from.get(), b->from.get()) &&
                   type_expr_equal(a->to.get(), b->to.get());
        case TypeKind::Array:
            return a->length == b->length && type_expr_equal(a->elem.get(), b->elem.get());
    }
    return false;
}

std::string render_type(const TypeExpr& t) {
    switch (t.kind) {
        case TypeKind::Named:
            return t.name;
        case TypeKind::Var:
            return "%" + t.name;
        case TypeKind::Arrow: {
            std::string lhs = render_type(*t.from);
            if (t.from->kind == TypeKind::Arrow) lhs = "(" + lhs + ")";
            return lhs + " -> " + render_type(*t.to);
        }
        case TypeKind::Array:
            if (t.length < 0) return "Array<" + render_type(*t.elem) + ">";
            return "Array<" + render_type(*t.elem) + ", " + std::to_string(t.length) + ">";
    }
    return "?";
}

bool expr_equal(const Expr* a, const Expr* b) {
    if (a == nullptr || b == nullptr) return a == b;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case ExprKind::IntLit: return a->int_value == b->int_value;
        case ExprKind::FloatLit: return a->float_value == b->float_value;
        case ExprKind::BoolLit: return a->bool_value == b->bool_value;
        case ExprKind::VoidLit: return true;
        case ExprKind::Ident: return a->ident == b->ident;
        case ExprKind::Chain: {
            if (!expr_equal(a->head.get(), b->head.get())) return false;
            if (a->calls.size() != b->calls.size()) return false;
            for (size_t i = 0; i < a->calls.size(); ++i) {
                if (a->calls[i].callee != b->calls[i].callee) return false;
                if (a->calls[i].args.size() != b->calls[i].args.size()) return false;
                for (size_t j = 0; j < a->calls[i].args.size(); ++j)
                    if (!expr_equal(a->calls[i].args[j].get(), b->calls[i].args[j].get()))
                        return false;
            }
            return true;
        }
    }
    return false;
}

namespace {

std::string render_float(float f) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(f));
    std::string s(buf);
    // Keep float literals lexically distinct from ints.
    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
        s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
        s += ".0";
    return s;
}

}  // namespace

std::string render_expr(const Expr& e) {
    switch (e.kind) {
        case ExprKind::IntLit: return std::to_string(e.int_value);
        case ExprKind::FloatLit: return render_float(e.float_value);
        case ExprKind::BoolLit: return e.bool_value ? "true" : "false";
        case ExprKind::VoidLit: return "void";
        case ExprKind::Ident: return e.ident;
        case ExprKind::Chain: {
            std::string out = render_expr(*e.head);
            for (const auto& c : e.calls) {
                out += "." + c.callee + "(";
                for (size_t i = 0; i < c.args.size(); ++i) {
                    if (i) out += ", ";
                    out += render_expr(*c.args[i]);
                }
                out += ")";
            }
            return out;
        }
    }
    return "?";
}

namespace {

bool param_equal(const Param& a, const Param& b) {
    return a.name == b.name && type_expr_equal(a.type.get(), b.type.get());
}

void render_params(std::ostringstream& os, const std::vector<Param>& ps) {
    os << "(";
    for (size_t i = 0; i < ps.size(); ++i) {
        if (i) os << ", ";
        os << ps[i].name;
        if (ps[i].type) os << ": " << render_type(*ps[i].type);
    }
    os << ")";
}

}  // namespace

bool decl_equal(const Decl& a, const Decl& b) {
    if (a.kind != b.kind || a.name != b.name) return false;
    if (a.flow_in.has_value() != b.flow_in.has_value()) return false;
    if (a.flow_in && !param_equal(*a.flow_in, *b.flow_in)) return false;
    if (a.has_param_list != b.has_param_list) return false;
    if (a.params.size() != b.params.size()) return false;
    for (size_t i = 0; i < a.params.size(); ++i)
        if (!param_equal(a.params[i], b.params[i])) return false;
    if (!type_expr_equal(a.flow_out.get(), b.flow_out.get())) return false;
    if (!(a.meta == b.meta)) return false;
    if (!type_expr_equal(a.global_type.get(), b.global_type.get())) return false;
    if (!expr_equal(a.global_init.get(), b.global_init.get())) return false;
    if (a.body.size() != b.body.size()) return false;
    for (size_t i = 0; i < a.body.size(); ++i) {
        if (a.body[i].binding != b.body[i].binding) return false;
        if (!expr_equal(a.body[i].value.get(), b.body[i].value.get())) return false;
    }
    return true;
}

bool program_equal(const SourceProgram& a, const SourceProgram& b) {
    if (a.decls.size() != b.decls.size()) return false;
    for (size_t i = 0; i < a.decls.size(); ++i)
        if (!decl_equal(a.decls[i], b.decls[i])) return false;
    return true;
}

std::string render_decl(const Decl& d) {
    std::ostringstream os;
    switch (d.kind) {
        case DeclKind::Primitive: os << "primitive "; break;
        case DeclKind::Func: os << "func "; break;
        case DeclKind::Global: os << "global "; break;
        case DeclKind::Event: os << "event "; break;
        case DeclKind::Interrupt: os << "interrupt "; break;
    }
    os << d.name;
    if (d.kind == DeclKind::Global) {
        os << ": " << render_type(*d.global_type);
        if (d.global_init) os << " = " << render_expr(*d.global_init);
        os << "\n";
        return os.str();
    }
    render_params(os, {*d.flow_in});
    if (d.has_param_list) render_params(os, d.params);
    if (d.flow_out) os << " -> " << render_type(*d.flow_out);
    if (d.meta.builtin) os << " [builtin]";
    if (d.meta.io) os << " [IO]";
    for (const auto& w : d.meta.writes) os << " [write " << w << "]";
    if (d.kind == DeclKind::Primitive && d.body.empty()) {
        os << "\n";
        return os.str();
    }
    os << " {\n";
    for (const auto& s : d.body) {
        os << "  ";
        if (s.binding) os << *s.binding << " = ";
        os << render_expr(*s.value) << "\n";
    }
    os << "}\n";
    return os.str();
}

std::string render_program(const SourceProgram& p) {
    std::string out;
    for (size_t i = 0; i < p.decls.size(); ++i) {
        if (i) out += "\n";
        out += render_decl(p.decls[i]);
    }
    return out;
}

}  // namespace purevm
