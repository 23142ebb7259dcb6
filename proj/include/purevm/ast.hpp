#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "purevm/source.hpp"

namespace purevm {

// ---- Surface types ------------------------------------------------------

enum class TypeKind { Named, Var, Arrow, Array };

struct TypeExpr;
using TypeExprPtr = std::shared_ptr<TypeExpr>;

struct TypeExpr {
    TypeKind kind = TypeKind::Named;
    std::string name;       // Named: "Int" etc.; Var: "a" for %a
    TypeExprPtr from, to;   // Arrow
    TypeExprPtr elem;       // Array
    long length = -1;       // Array; -1 means unconstrained (primitive catalog only)
    Span span;
};

TypeExprPtr named_type(const std::string& n);
TypeExprPtr var_type(const std::string& n);
TypeExprPtr arrow_type(TypeExprPtr a, TypeExprPtr b);
TypeExprPtr array_type(TypeExprPtr elem, long len);
bool type_expr_equal(const TypeExpr* a, const TypeExpr* b);
std::string render_type(const TypeExpr& t);

// ---- Expressions --------------------------------------------------------

enum class ExprKind { IntLit, FloatLit, BoolLit, VoidLit, Ident, Chain };

struct Expr;
using ExprPtr = std::shared_ptr<Expr>;

struct CallElem {
    std::string callee;
    std::vector<ExprPtr> args;
    Span span;
};

struct Expr {
    ExprKind kind = ExprKind::VoidLit;
    long long int_value = 0;
    float float_value = 0.0f;
    bool bool_value = false;
    std::string ident;
    // Chain: head expression followed by one or more dot calls.
    ExprPtr head;
    std::vector<CallElem> calls;
    Span span;
};

bool expr_equal(const Expr* a, const Expr* b);
std::string render_expr(const Expr& e);

// ---- Statements and declarations ---------------------------------------

struct Stmt {
    std::optional<std::string> binding;
    ExprPtr value;
    Span span;
};

struct Param {
    std::string name;
    TypeExprPtr type;  // null: to be inferred
    Span span;
};

enum class DeclKind { Primitive, Func, Global, Event, Interrupt };

// Trailing metadata: [builtin], [IO], [write name].
struct Metadata {
    bool builtin = false;
    bool io = false;
    std::vector<std::string> writes;
    bool operator==(const Metadata&) const = default;
};

struct Decl {
    DeclKind kind = DeclKind::Func;
    std::string name;
    std::optional<Param> flow_in;     // absent only for Global
    std::vector<Param> params;        // second parameter list
    bool has_param_list = false;      // distinguishes f(x) from f(x)()
    TypeExprPtr flow_out;             // null: inferred (Func) / Void (Event)
    Metadata meta;
    TypeExprPtr global_type;          // Global only
    ExprPtr global_init;              // Global only, optional literal
    std::vector<Stmt> body;
    Span span;
};

struct SourceProgram {
    std::vector<Decl> decls;
};

bool decl_equal(const Decl& a, const Decl& b);
bool program_equal(const SourceProgram& a, const SourceProgram& b);

// Prints a program in canonical form; parsing the result yields an
// equivalent AST (spans aside).
std::string render_program(const SourceProgram& p);
std::string render_decl(const Decl& d);

}  // namespace purevm
