#include "purevm/catalog.hpp"

#include <map>
#include <stdexcept>

namespace purevm {

namespace {

PrimInfo prim(std::string name, PrimOp op, TypePtr flow, std::string flow_name,
              std::vector<TypePtr> params, std::vector<std::string> param_names, TypePtr result) {
    PrimInfo p;
    p.name = std::move(name);
    p.op = op;
    p.sig.flow = std::move(flow);
    p.sig.params = std::move(params);
    p.sig.result = std::move(result);
    p.flow_name = std::move(flow_name);
    p.param_names = std::move(param_names);
    return p;
}

std::vector<PrimInfo> build_catalog() {
    const TypePtr A = t_var(1), B = t_var(2);
    const TypePtr I = t_int(), F = t_float(), Bo = t_bool(), V = t_void();
    const TypePtr ArrA = t_array(A, -1);

    std::vector<PrimInfo> c;
    auto add = [&](PrimInfo p) { c.push_back(std::move(p)); };

    add(prim("select", PrimOp::Select, Bo, "b", {A, A}, {"t", "f"}, A));
    add(prim("apply", PrimOp::Apply, A, "a", {t_arrow(A, B)}, {"func"}, B));

    {
        auto p = prim("set", PrimOp::Set, A, "x", {A}, {"v"}, A);
        p.write_flow = true;
        p.result_is_flow = true;
        add(p);
    }
    add(prim("toVoid", PrimOp::ToVoid, A, "x", {}, {}, V));
    {
        auto p = prim("emit", PrimOp::Emit, A, "x", {}, {}, A);
        p.result_is_flow = true;
        add(p);
    }
    {
        auto p = prim("sendCmd", PrimOp::SendCmd, I, "x", {}, {}, I);
        p.io = true;
        p.result_is_flow = true;
        add(p);
    }
    {
        auto p = prim("getTemp", PrimOp::GetTemp, F, "x", {}, {}, F);
        p.io = true;
        p.write_flow = true;
        p.result_is_flow = true;
        add(p);
    }

    add(prim("eq", PrimOp::Eq, A, "a", {A}, {"b"}, Bo));
    add(prim("ne", PrimOp::Ne, A, "a", {A}, {"b"}, Bo));

    add(prim("add", PrimOp::Add, I, "a", {I}, {"b"}, I));
    add(prim("sub", PrimOp::Sub, I, "a", {I}, {"b"}, I));
    add(prim("mul", PrimOp::Mul, I, "a", {I}, {"b"}, I));
    add(prim("div", PrimOp::Div, I, "a", {I}, {"b"}, I));
    add(prim("mod", PrimOp::Mod, I, "a", {I}, {"b"}, I));
    {
        auto p = prim("inc", PrimOp::Inc, I, "x", {}, {}, I);
        p.write_flow = true;
        p.result_is_flow = true;
        add(p);
    }
    {
        auto p = prim("dec", PrimOp::Dec, I, "x", {}, {}, I);
        p.write_flow = true;
        p.result_is_flow = true;
        add(p);
    }
    {
        // Flows out the value before the increment.
        auto p = prim("postInc", PrimOp::PostInc, I, "x", {}, {}, I);
        p.write_flow = true;
        add(p);
    }
    add(prim("lt", PrimOp::Lt, I, "a", {I}, {"b"}, Bo));
    add(prim("le", PrimOp::Le, I, "a", {I}, {"b"}, Bo));
    add(prim("gt", PrimOp::Gt, I, "a", {I}, {"b"}, Bo));
    add(prim("ge", PrimOp::Ge, I, "a", {I}, {"b"}, Bo));
    add(prim("bitAnd", PrimOp::BitAnd, I, "a", {I}, {"b"}, I));
    add(prim("bitOr", PrimOp::BitOr, I, "a", {I}, {"b"}, I));
    add(prim("bitXor", PrimOp::BitXor, I, "a", {I}, {"b"}, I));
    add(prim("bitNot", PrimOp::BitNot, I, "a", {}, {}, I));
    add(prim("shl", PrimOp::Shl, I, "a", {I}, {"b"}, I));
    add(prim("shr", PrimOp::Shr, I, "a", {I}, {"b"}, I));

    add(prim("and", PrimOp::And, Bo, "a", {Bo}, {"b"}, Bo));
    add(prim("or", PrimOp::Or, Bo, "a", {Bo}, {"b"}, Bo));
    add(prim("not", PrimOp::Not, Bo, "a", {}, {}, Bo));

    add(prim("fadd", PrimOp::FAdd, F, "a", {F}, {"b"}, F));
    add(prim("fsub", PrimOp::FSub, F, "a", {F}, {"b"}, F));
    add(prim("fmul", PrimOp::FMul, F, "a", {F}, {"b"}, F));
    add(prim("fdiv", PrimOp::FDiv, F, "a", {F}, {"b"}, F));
    add(prim("flt", PrimOp::FLt, F, "a", {F}, {"b"}, Bo));
    add(prim("fle", PrimOp::FLe, F, "a", {F}, {"b"}, Bo));
    add(prim("fgt", PrimOp::FGt, F, "a", {F}, {"b"}, Bo));
    add(prim("fge", PrimOp::FGe, F, "a", {F}, {"b"}, Bo));
    add(prim("fsqrt", PrimOp::FSqrt, F, "a", {}, {}, F));
    add(prim("toFloat", PrimOp::ToFloat, I, "a", {}, {}, F));
    add(prim("toInt", PrimOp::ToInt, F, "a", {}, {}, I));

    add(prim("getAt", PrimOp::GetAt, ArrA, "a", {I}, {"i"}, A));
    {
        auto p = prim("setAt", PrimOp::SetAt, ArrA, "a", {I, A}, {"i", "v"}, ArrA);
        p.write_flow = true;
        p.result_is_flow = true;
        add(p);
    }
    add(prim("len", PrimOp::Len, ArrA, "a", {}, {}, I));

    return c;
}

}  // namespace

const std::vector<PrimInfo>& prim_catalog() {
    static const std::vector<PrimInfo> c = build_catalog();
    return c;
}

const PrimInfo* find_prim(const std::string& name) {
    static const std::map<std::string, size_t> index = [] {
        std::map<std::string, size_t> m;
        for (size_t i = 0; i < prim_catalog().size(); ++i) m[prim_catalog()[i].name] = i;
        return m;
    }();
    auto it = index.find(name);
    return it == index.end() ? nullptr : &prim_catalog()[it->second];
}

const PrimInfo& prim_by_op(PrimOp op) {
    for (const auto& p : prim_catalog())
        if (p.op == op) return p;
    throw std::logic_error("primitive op not in catalog");
}

const char* prelude_source() {
    return "func ifElse(p)(s, t, f) {\n"
           "  func = p.apply(s).select(t, f)\n"
           "  p.apply(func)\n"
           "}\n";
}

}  // namespace purevm
