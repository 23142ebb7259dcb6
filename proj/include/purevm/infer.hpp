#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "purevm/ast.hpp"
#include "purevm/catalog.hpp"
#include "purevm/types.hpp"

namespace purevm {

// What an identifier in expression position resolved to.
struct ResolvedIdent {
    enum class K { Flow, Param, Local, Global, Callable } k = K::Local;
    size_t index = 0;   // Param / Callable
    std::string name;   // Local / Global
};

struct TypedCallable {
    DeclKind kind = DeclKind::Func;
    std::string name;
    CallableSig sig;          // solved; quantified vars listed in `quant`
    std::vector<int> quant;
    std::string flow_name;
    std::vector<std::string> param_names;
    bool io = false;
    bool write_flow = false;
    std::vector<size_t> write_params;
    std::set<std::string> write_globals;
    bool result_is_flow = false;
    PrimOp op = PrimOp::None;
    const Decl* decl = nullptr;      // null for catalog primitives
    std::string event_target;        // Interrupt only
};

struct GlobalInfo {
    TypePtr type;
    const Decl* decl = nullptr;
    size_t order = 0;
};

// A fully checked program. Expression types are ground except inside
// polymorphic library functions, where they mention the function's
// quantified variables.
struct TypedProgram {
    std::shared_ptr<SourceProgram> prelude;
    std::shared_ptr<SourceProgram> user;
    std::vector<TypedCallable> callables;
    std::map<std::string, size_t> callable_index;
    std::map<std::string, GlobalInfo> globals;
    std::vector<std::string> global_order;
    std::map<const Expr*, TypePtr> expr_type;
    std::map<const CallElem*, size_t> call_target;
    std::map<const Expr*, ResolvedIdent> ident_info;

    const TypedCallable* find(const std::string& name) const {
        auto it = callable_index.find(name);
        return it == callable_index.end() ? nullptr : &callables[it->second];
    }
};

TypedProgram infer_program(std::shared_ptr<SourceProgram> user);

// One line per declaration (built-ins first, then library, then user),
// with canonical %a/%b variable names.
std::string check_listing(const TypedProgram& tp);
std::string show_callable(const TypedCallable& c);

}  // namespace purevm
