#include "purevm/types.hpp"

#include <algorithm>

namespace purevm {

namespace {

TypePtr make(TypeTerm t) { return std::make_shared<const TypeTerm>(std::move(t)); }

const char* base_name(BaseType b) {
    switch (b) {
        case BaseType::Int: return "Int";
        case BaseType::Float: return "Float";
        case BaseType::Bool: return "Bool";
        case BaseType::Void: return "Void";
    }
    return "?";
}

}  // namespace

TypePtr t_base(BaseType b) {
    TypeTerm t;
    t.k = TypeTerm::K::Base;
    t.base = b;
    return make(std::move(t));
}

TypePtr t_int() {
    static TypePtr t = t_base(BaseType::Int);
    return t;
}
TypePtr t_float() {
    static TypePtr t = t_base(BaseType::Float);
    return t;
}
TypePtr t_bool() {
    static TypePtr t = t_base(BaseType::Bool);
    return t;
}
TypePtr t_void() {
    static TypePtr t = t_base(BaseType::Void);
    return t;
}

TypePtr t_var(int id) {
    TypeTerm t;
    t.k = TypeTerm::K::Var;
    t.var = id;
    return make(std::move(t));
}

TypePtr t_arrow(TypePtr a, TypePtr b) {
    TypeTerm t;
    t.k = TypeTerm::K::Arrow;
    t.from = std::move(a);
    t.to = std::move(b);
    return make(std::move(t));
}

TypePtr t_array(TypePtr elem, long len) {
    TypeTerm t;
    t.k = TypeTerm::K::Array;
    t.elem = std::move(elem);
    t.len = len;
    return make(std::move(t));
}

bool type_equal(const TypePtr& a, const TypePtr& b) {
    if (a->k != b->k) return false;
    switch (a->k) {
        case TypeTerm::K::Base: return a->base == b->base;
        case TypeTerm::K::Var: return a->var == b->var;
        case TypeTerm::K::Arrow:
            return type_equal(a->from, b->from) && type_equal(a->to, b->to);
        case TypeTerm::K::Array:
            return a->len == b->len && type_equal(a->elem, b->elem);
    }
    return false;
}

TypePtr Subst::apply(const TypePtr& t) const {
    switch (t->k) {
        case TypeTerm::K::Base:
            return t;
        case TypeTerm::K::Var: {
            auto it = map_.find(t->var);
            if (it == map_.end()) return t;
            return apply(it->second);
        }
        case TypeTerm::K::Arrow: {
            TypePtr a = apply(t->from), b = apply(t->to);
            if (a == t->from && b == t->to) return t;
            return t_arrow(a, b);
        }
        case TypeTerm::K::Array: {
            TypePtr e = apply(t->elem);
            if (e == t->elem) return t;
            return t_array(e, t->len);
        }
    }
    return t;
}

namespace {

bool occurs(int var, const TypePtr& t, const Subst& s) {
    TypePtr r = s.apply(t);
    switch (r->k) {
        case TypeTerm::K::Base: return false;
        case TypeTerm::K::Var: return r->var == var;
        case TypeTerm::K::Arrow: return occurs(var, r->from, s) || occurs(var, r->to, s);
        case TypeTerm::K::Array: return occurs(var, r->elem, s);
    }
    return false;
}

}  // namespace

void Subst::bind(int var, const TypePtr& t, Pos where) {
    if (t->k == TypeTerm::K::Var && t->var == var) return;
    if (occurs(var, t, *this))
        throw TypeError(where, "occurs check failed: %" + std::to_string(var) +
                                   " appears in " + show_type(apply(t)));
    map_[var] = t;
}

void unify(const TypePtr& ta, const TypePtr& tb, Subst& s, Pos where) {
    TypePtr a = s.apply(ta);
    TypePtr b = s.apply(tb);
    if (a->k == TypeTerm::K::Var) {
        s.bind(a->var, b, where);
        return;
    }
    if (b->k == TypeTerm::K::Var) {
        s.bind(b->var, a, where);
        return;
    }
    if (a->k == TypeTerm::K::Base && b->k == TypeTerm::K::Base && a->base == b->base) return;
    if (a->k == TypeTerm::K::Arrow && b->k == TypeTerm::K::Arrow) {
        unify(a->from, b->from, s, where);
        unify(a->to, b->to, s, where);
        return;
    }
    if (a->k == TypeTerm::K::Array && b->k == TypeTerm::K::Array) {
        if (a->len >= 0 && b->len >= 0 && a->len != b->len)
            throw TypeError(where, "array length mismatch: " + show_type(a) + " vs " + show_type(b));
        unify(a->elem, b->elem, s, where);
        return;
    }
    throw TypeError(where, "cannot unify " + show_type(a) + " with " + show_type(b));
}

std::string show_type(const TypePtr& t, std::map<int, std::string>& names) {
    switch (t->k) {
        case TypeTerm::K::Base:
            return base_name(t->base);
        case TypeTerm::K::Var: {
            auto it = names.find(t->var);
            if (it == names.end()) {
                size_t n = names.size();
                std::string nm;
                do {
                    nm.insert(nm.begin(), static_cast<char>('a' + n % 26));
                    n /= 26;
                } while (n > 0);
                it = names.emplace(t->var, nm).first;
            }
            return "%" + it->second;
        }
        case TypeTerm::K::Arrow: {
            std::string lhs = show_type(t->from, names);
            if (t->from->k == TypeTerm::K::Arrow) lhs = "(" + lhs + ")";
            return lhs + " -> " + show_type(t->to, names);
        }
        case TypeTerm::K::Array:
            if (t->len < 0) return "Array<" + show_type(t->elem, names) + ">";
            return "Array<" + show_type(t->elem, names) + ", " + std::to_string(t->len) + ">";
    }
    return "?";
}

std::string show_type(const TypePtr& t) {
    std::map<int, std::string> names;
    return show_type(t, names);
}

void collect_vars(const TypePtr& t, std::vector<int>& out) {
    switch (t->k) {
        case TypeTerm::K::Base:
            return;
        case TypeTerm::K::Var:
            if (std::find(out.begin(), out.end(), t->var) == out.end()) out.push_back(t->var);
            return;
        case TypeTerm::K::Arrow:
            collect_vars(t->from, out);
            collect_vars(t->to, out);
            return;
        case TypeTerm::K::Array:
            collect_vars(t->elem, out);
            return;
    }
}

}  // namespace purevm
