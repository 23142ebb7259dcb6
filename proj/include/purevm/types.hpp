#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "purevm/source.hpp"

namespace purevm {

enum class BaseType { Int, Float, Bool, Void };

struct TypeTerm;
using TypePtr = std::shared_ptr<const TypeTerm>;

// First-order terms: base types, variables, arrows and sized arrays.
// An array length of -1 acts as a wildcard and only appears in the
// signatures of built-in array primitives.
struct TypeTerm {
    enum class K { Base, Var, Arrow, Array } k = K::Base;
    BaseType base = BaseType::Void;
    int var = 0;
    TypePtr from, to;
    TypePtr elem;
    long len = -1;
};

TypePtr t_base(BaseType b);
TypePtr t_int();
TypePtr t_float();
TypePtr t_bool();
TypePtr t_void();
TypePtr t_var(int id);
TypePtr t_arrow(TypePtr a, TypePtr b);
TypePtr t_array(TypePtr elem, long len);

bool type_equal(const TypePtr& a, const TypePtr& b);

// Idempotent substitution: apply fully resolves variables, so applying the
// result again is a no-op.
class Subst {
  public:
    TypePtr apply(const TypePtr& t) const;
    void bind(int var, const TypePtr& t, Pos where);
    bool contains(int var) const { return map_.count(var) != 0; }
    size_t size() const { return map_.size(); }

  private:
    std::map<int, TypePtr> map_;
};

// Unifies two terms under `s`, extending it in place. Throws TypeError
// (Mismatch or OccursCheck) positioned at `where`.
void unify(const TypePtr& a, const TypePtr& b, Subst& s, Pos where);

// Renders a type; variables are shown as %a, %b, ... in first-occurrence
// order recorded in `names`.
std::string show_type(const TypePtr& t, std::map<int, std::string>& names);
std::string show_type(const TypePtr& t);

void collect_vars(const TypePtr& t, std::vector<int>& out);

}  // namespace purevm
