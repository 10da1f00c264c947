#include "hydranav/syntax.hpp"

#include <map>

namespace hydranav::syntax {

namespace make {

namespace {

std::shared_ptr<Term> term(TermKind k, Loc l) {
    auto t = std::make_shared<Term>();
    t->kind = k;
    t->loc = l;
    return t;
}

std::shared_ptr<Type> type(TypeKind k, Loc l) {
    auto t = std::make_shared<Type>();
    t->kind = k;
    t->loc = l;
    return t;
}

} // namespace

TermPtr unit(Loc l) { return term(TermKind::Unit, l); }

TermPtr var(std::string n, Loc l) {
    auto t = term(TermKind::Var, l);
    t->name = std::move(n);
    return t;
}

TermPtr lam(std::string x, TermPtr body, Loc l) {
    auto t = term(TermKind::Lam, l);
    t->name = std::move(x);
    t->kids = {std::move(body)};
    return t;
}

TermPtr app(TermPtr f, TermPtr a, Loc l) {
    auto t = term(TermKind::App, l);
    t->kids = {std::move(f), std::move(a)};
    return t;
}

TermPtr force(TermPtr m, Loc l) {
    auto t = term(TermKind::Force, l);
    t->kids = {std::move(m)};
    return t;
}

TermPtr force_prime(TermPtr r, Loc l) {
    auto t = term(TermKind::ForcePrime, l);
    t->kids = {std::move(r)};
    return t;
}

TermPtr lift(TermPtr m, Loc l) {
    auto t = term(TermKind::Lift, l);
    t->kids = {std::move(m)};
    return t;
}

TermPtr pair(TermPtr a, TermPtr b, Loc l) {
    auto t = term(TermKind::Pair, l);
    t->kids = {std::move(a), std::move(b)};
    return t;
}

TermPtr let_pair(std::string x, std::string y, TermPtr scrut, TermPtr body, Loc l) {
    auto t = term(TermKind::LetPair, l);
    t->name = std::move(x);
    t->name2 = std::move(y);
    t->kids = {std::move(scrut), std::move(body)};
    return t;
}

TermPtr lam_prime(std::string x, TermPtr body, Loc l) {
    auto t = term(TermKind::LamPrime, l);
    t->name = std::move(x);
    t->kids = {std::move(body)};
    return t;
}

TermPtr app_at(TermPtr f, TermPtr a, Loc l) {
    auto t = term(TermKind::AppAt, l);
    t->kids = {std::move(f), std::move(a)};
    return t;
}

TermPtr inl(TermPtr m, Loc l) {
    auto t = term(TermKind::Inl, l);
    t->kids = {std::move(m)};
    return t;
}

TermPtr inr(TermPtr m, Loc l) {
    auto t = term(TermKind::Inr, l);
    t->kids = {std::move(m)};
    return t;
}

TermPtr case_of(TermPtr scrut, std::string x, TermPtr left, std::string y, TermPtr right, Loc l) {
    auto t = term(TermKind::Case, l);
    t->name = std::move(x);
    t->name2 = std::move(y);
    t->kids = {std::move(scrut), std::move(left), std::move(right)};
    return t;
}

TermPtr hole(std::string n, Loc l) {
    auto t = term(TermKind::Hole, l);
    t->name = std::move(n);
    return t;
}

TermPtr nat(std::uint64_t v, Loc l) {
    auto t = term(TermKind::NatLit, l);
    t->nat = v;
    return t;
}

TermPtr real(double v, Loc l) {
    auto t = term(TermKind::RealLit, l);
    t->x = v;
    return t;
}

TermPtr point(double x, double y, Loc l) {
    auto t = term(TermKind::PointLit, l);
    t->x = x;
    t->y = y;
    return t;
}

TermPtr list(std::vector<TermPtr> elems, Loc l) {
    auto t = term(TermKind::ListLit, l);
    t->kids = std::move(elems);
    return t;
}

TermPtr annot(TermPtr m, TypePtr a, Loc l) {
    auto t = term(TermKind::Annot, l);
    t->kids = {std::move(m)};
    t->type = std::move(a);
    return t;
}

TypePtr see(TermPtr n, Loc l) {
    auto t = type(TypeKind::See, l);
    t->args = {std::move(n)};
    return t;
}

TypePtr at(TermPtr g, Loc l) {
    auto t = type(TypeKind::At, l);
    t->args = {std::move(g)};
    return t;
}

TypePtr safe(TermPtr c, Loc l) {
    auto t = type(TypeKind::Safe, l);
    t->args = {std::move(c)};
    return t;
}

TypePtr unit_type(Loc l) { return type(TypeKind::Unit, l); }

TypePtr bang(TypePtr a, Loc l) {
    auto t = type(TypeKind::Bang, l);
    t->kids = {std::move(a)};
    return t;
}

namespace {
TypePtr binder_type(TypeKind k, std::string x, TypePtr a, TypePtr b, Loc l) {
    auto t = type(k, l);
    t->binder = std::move(x);
    t->kids = {std::move(a), std::move(b)};
    return t;
}
} // namespace

TypePtr lin_pi(std::string x, TypePtr a, TypePtr b, Loc l) {
    return binder_type(TypeKind::LinPi, std::move(x), std::move(a), std::move(b), l);
}

TypePtr tensor(std::string x, TypePtr a, TypePtr b, Loc l) {
    return binder_type(TypeKind::LinTensor, std::move(x), std::move(a), std::move(b), l);
}

TypePtr param_pi(std::string x, TypePtr a, TypePtr b, Loc l) {
    return binder_type(TypeKind::ParamPi, std::move(x), std::move(a), std::move(b), l);
}

TypePtr sum(TypePtr a, TypePtr b, Loc l) {
    auto t = type(TypeKind::Sum, l);
    t->kids = {std::move(a), std::move(b)};
    return t;
}

TypePtr base(TypeKind k, Loc l) { return type(k, l); }

TypePtr list_of(TypePtr a, Loc l) {
    auto t = type(TypeKind::List, l);
    t->kids = {std::move(a)};
    return t;
}

TypePtr prop(std::string name, std::vector<TermPtr> args, Loc l) {
    auto t = type(TypeKind::Prop, l);
    t->binder = std::move(name);
    t->args = std::move(args);
    return t;
}

} // namespace make

bool is_simple(TypeKind k) {
    return k == TypeKind::See || k == TypeKind::At || k == TypeKind::Safe;
}

static bool has_binder(TypeKind k) {
    return k == TypeKind::LinPi || k == TypeKind::LinTensor || k == TypeKind::ParamPi;
}

// Structural equality -------------------------------------------------------------

bool equal(const TermPtr& a, const TermPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->kind != b->kind || a->name != b->name || a->name2 != b->name2) return false;
    if (a->nat != b->nat || a->x != b->x || a->y != b->y) return false;
    if (a->kids.size() != b->kids.size()) return false;
    for (std::size_t i = 0; i < a->kids.size(); ++i)
        if (!equal(a->kids[i], b->kids[i])) return false;
    if (a->kind == TermKind::Annot) return equal(a->type, b->type);
    return true;
}

bool equal(const TypePtr& a, const TypePtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->kind != b->kind || a->binder != b->binder) return false;
    if (a->kids.size() != b->kids.size() || a->args.size() != b->args.size()) return false;
    for (std::size_t i = 0; i < a->kids.size(); ++i)
        if (!equal(a->kids[i], b->kids[i])) return false;
    for (std::size_t i = 0; i < a->args.size(); ++i)
        if (!equal(a->args[i], b->args[i])) return false;
    return true;
}

static bool equal_params(const std::vector<Param>& a, const std::vector<Param>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].name != b[i].name || !equal(a[i].type, b[i].type)) return false;
    return true;
}

bool equal(const Module& a, const Module& b) {
    if (a.decls.size() != b.decls.size()) return false;
    for (std::size_t i = 0; i < a.decls.size(); ++i) {
        const auto& x = a.decls[i];
        const auto& y = b.decls[i];
        if (x.kind != y.kind || x.name != y.name) return false;
        if (!equal(x.type, y.type) || !equal_params(x.params, y.params)) return false;
        if (x.body.has_value() != y.body.has_value()) return false;
        if (x.body && !equal(*x.body, *y.body)) return false;
    }
    return true;
}

// Alpha equality --------------------------------------------------------------------

namespace {

// Pairs of bound names, innermost last.
using BinderEnv = std::vector<std::pair<std::string, std::string>>;

bool same_var(const BinderEnv& env, const std::string& a, const std::string& b) {
    for (auto it = env.rbegin(); it != env.rend(); ++it) {
        bool la = it->first == a;
        bool lb = it->second == b;
        if (la || lb) return la && lb;
    }
    return a == b;
}

bool alpha_term(const TermPtr& a, const TermPtr& b, BinderEnv& env);

bool alpha_type(const TypePtr& a, const TypePtr& b, BinderEnv& env) {
    if (!a || !b) return a == b;
    if (a->kind != b->kind || a->kids.size() != b->kids.size() || a->args.size() != b->args.size())
        return false;
    if (a->kind == TypeKind::Prop && a->binder != b->binder) return false;
    for (std::size_t i = 0; i < a->args.size(); ++i)
        if (!alpha_term(a->args[i], b->args[i], env)) return false;
    if (has_binder(a->kind)) {
        if (!alpha_type(a->kids[0], b->kids[0], env)) return false;
        env.emplace_back(a->binder, b->binder);
        bool ok = alpha_type(a->kids[1], b->kids[1], env);
        env.pop_back();
        return ok;
    }
    for (std::size_t i = 0; i < a->kids.size(); ++i)
        if (!alpha_type(a->kids[i], b->kids[i], env)) return false;
    return true;
}

bool alpha_term(const TermPtr& a, const TermPtr& b, BinderEnv& env) {
    if (!a || !b) return a == b;
    if (a->kind != b->kind || a->kids.size() != b->kids.size()) return false;
    switch (a->kind) {
    case TermKind::Var: return same_var(env, a->name, b->name);
    case TermKind::Hole: return a->name == b->name;
    case TermKind::NatLit: return a->nat == b->nat;
    case TermKind::RealLit: return a->x == b->x;
    case TermKind::PointLit: return a->x == b->x && a->y == b->y;
    case TermKind::Lam:
    case TermKind::LamPrime: {
        env.emplace_back(a->name, b->name);
        bool ok = alpha_term(a->kids[0], b->kids[0], env);
        env.pop_back();
        return ok;
    }
    case TermKind::LetPair: {
        if (!alpha_term(a->kids[0], b->kids[0], env)) return false;
        env.emplace_back(a->name, b->name);
        env.emplace_back(a->name2, b->name2);
        bool ok = alpha_term(a->kids[1], b->kids[1], env);
        env.pop_back();
        env.pop_back();
        return ok;
    }
    case TermKind::Case: {
        if (!alpha_term(a->kids[0], b->kids[0], env)) return false;
        env.emplace_back(a->name, b->name);
        bool ok = alpha_term(a->kids[1], b->kids[1], env);
        env.pop_back();
        if (!ok) return false;
        env.emplace_back(a->name2, b->name2);
        ok = alpha_term(a->kids[2], b->kids[2], env);
        env.pop_back();
        return ok;
    }
    case TermKind::Annot:
        if (!alpha_type(a->type, b->type, env)) return false;
        break;
    default: break;
    }
    for (std::size_t i = 0; i < a->kids.size(); ++i)
        if (!alpha_term(a->kids[i], b->kids[i], env)) return false;
    return true;
}

} // namespace

bool alpha_equal(const TypePtr& a, const TypePtr& b) {
    BinderEnv env;
    return alpha_type(a, b, env);
}

bool alpha_equal(const TermPtr& a, const TermPtr& b) {
    BinderEnv env;
    return alpha_term(a, b, env);
}

// Free variables --------------------------------------------------------------------

namespace {

void fv_type(const TypePtr& t, std::set<std::string>& bound, std::set<std::string>& out);

void fv_term(const TermPtr& m, std::set<std::string>& bound, std::set<std::string>& out) {
    if (!m) return;
    auto under = [&](const std::vector<std::string>& names, const TermPtr& body) {
        std::vector<std::string> added;
        for (const auto& n : names)
            if (bound.insert(n).second) added.push_back(n);
        fv_term(body, bound, out);
        for (const auto& n : added) bound.erase(n);
    };
    switch (m->kind) {
    case TermKind::Var:
        if (!bound.count(m->name)) out.insert(m->name);
        return;
    case TermKind::Lam:
    case TermKind::LamPrime: under({m->name}, m->kids[0]); return;
    case TermKind::LetPair:
        fv_term(m->kids[0], bound, out);
        under({m->name, m->name2}, m->kids[1]);
        return;
    case TermKind::Case:
        fv_term(m->kids[0], bound, out);
        under({m->name}, m->kids[1]);
        under({m->name2}, m->kids[2]);
        return;
    case TermKind::Annot:
        fv_type(m->type, bound, out);
        break;
    default: break;
    }
    for (const auto& k : m->kids) fv_term(k, bound, out);
}

void fv_type(const TypePtr& t, std::set<std::string>& bound, std::set<std::string>& out) {
    if (!t) return;
    for (const auto& a : t->args) fv_term(a, bound, out);
    if (has_binder(t->kind)) {
        fv_type(t->kids[0], bound, out);
        bool added = !t->binder.empty() && bound.insert(t->binder).second;
        fv_type(t->kids[1], bound, out);
        if (added) bound.erase(t->binder);
        return;
    }
    for (const auto& k : t->kids) fv_type(k, bound, out);
}

} // namespace

std::set<std::string> free_vars(const TermPtr& m) {
    std::set<std::string> bound, out;
    fv_term(m, bound, out);
    return out;
}

std::set<std::string> free_vars(const TypePtr& t) {
    std::set<std::string> bound, out;
    fv_type(t, bound, out);
    return out;
}

std::string fresh_name(const std::string& base, const std::set<std::string>& avoid) {
    std::string n = base.empty() ? "x" : base;
    while (avoid.count(n)) n += '\'';
    return n;
}

// Substitution ----------------------------------------------------------------------

namespace {

struct Subst {
    const std::string& x;
    const TermPtr& repl;
    std::set<std::string> repl_fv;

    // Pick a binder name that cannot capture a free variable of the replacement.
    // Returns the new name and, if it changed, the renamed body.
    std::string avoid(const std::string& binder, const std::set<std::string>& body_fv) const {
        if (!repl_fv.count(binder)) return binder;
        std::set<std::string> all = repl_fv;
        all.insert(body_fv.begin(), body_fv.end());
        all.insert(x);
        return fresh_name(binder, all);
    }

    TermPtr term(const TermPtr& m) const;
    TypePtr type(const TypePtr& t) const;
};

TermPtr Subst::term(const TermPtr& m) const {
    if (!m) return m;
    auto copy = [&]() { return std::make_shared<Term>(*m); };
    switch (m->kind) {
    case TermKind::Var: return m->name == x ? repl : m;
    case TermKind::Unit:
    case TermKind::Hole:
    case TermKind::NatLit:
    case TermKind::RealLit:
    case TermKind::PointLit: return m;
    case TermKind::Lam:
    case TermKind::LamPrime: {
        if (m->name == x) return m;
        auto c = copy();
        auto body = m->kids[0];
        auto nb = avoid(m->name, free_vars(body));
        if (nb != m->name) body = syntax::subst(body, m->name, make::var(nb));
        c->name = nb;
        c->kids[0] = term(body);
        return c;
    }
    case TermKind::LetPair: {
        auto c = copy();
        c->kids[0] = term(m->kids[0]);
        if (m->name == x || m->name2 == x) return c;
        auto body = m->kids[1];
        auto fv = free_vars(body);
        auto n1 = avoid(m->name, fv);
        if (n1 != m->name) body = syntax::subst(body, m->name, make::var(n1));
        fv = free_vars(body);
        fv.insert(n1);
        auto n2 = avoid(m->name2, fv);
        if (n2 != m->name2) body = syntax::subst(body, m->name2, make::var(n2));
        c->name = n1;
        c->name2 = n2;
        c->kids[1] = term(body);
        return c;
    }
    case TermKind::Case: {
        auto c = copy();
        c->kids[0] = term(m->kids[0]);
        auto branch = [&](const std::string& b, const TermPtr& body, std::string& out_name) {
            if (b == x) {
                out_name = b;
                return body;
            }
            auto nb = avoid(b, free_vars(body));
            auto renamed = nb == b ? body : syntax::subst(body, b, make::var(nb));
            out_name = nb;
            return term(renamed);
        };
        c->kids[1] = branch(m->name, m->kids[1], c->name);
        c->kids[2] = branch(m->name2, m->kids[2], c->name2);
        return c;
    }
    default: break;
    }
    auto c = copy();
    for (auto& k : c->kids) k = term(k);
    if (c->kind == TermKind::Annot) c->type = type(c->type);
    return c;
}

TypePtr Subst::type(const TypePtr& t) const {
    if (!t) return t;
    auto c = std::make_shared<Type>(*t);
    for (auto& a : c->args) a = term(a);
    if (has_binder(t->kind)) {
        c->kids[0] = type(t->kids[0]);
        if (t->binder.empty() || t->binder == x) {
            if (t->binder.empty()) c->kids[1] = type(t->kids[1]);
            return c;
        }
        auto body = t->kids[1];
        auto nb = avoid(t->binder, free_vars(body));
        if (nb != t->binder) body = syntax::subst(body, t->binder, make::var(nb));
        c->binder = nb;
        c->kids[1] = type(body);
        return c;
    }
    for (auto& k : c->kids) k = type(k);
    return c;
}

} // namespace

TermPtr subst(const TermPtr& m, const std::string& x, const TermPtr& replacement) {
    if (!free_vars(m).count(x)) return m;
    Subst s{x, replacement, free_vars(replacement)};
    return s.term(m);
}

TypePtr subst(const TypePtr& t, const std::string& x, const TermPtr& replacement) {
    if (!free_vars(t).count(x)) return t;
    Subst s{x, replacement, free_vars(replacement)};
    return s.type(t);
}

// Shape and classification ----------------------------------------------------------

TypePtr shape(const TypePtr& t) {
    switch (t->kind) {
    case TypeKind::See:
    case TypeKind::At:
    case TypeKind::Safe: return make::unit_type(t->loc);
    case TypeKind::LinPi:
    case TypeKind::ParamPi:
        return make::param_pi(t->binder, shape(t->kids[0]), shape(t->kids[1]), t->loc);
    case TypeKind::LinTensor:
        return make::tensor(t->binder, shape(t->kids[0]), shape(t->kids[1]), t->loc);
    case TypeKind::Bang: return make::bang(shape(t->kids[0]), t->loc);
    case TypeKind::Sum: return make::sum(shape(t->kids[0]), shape(t->kids[1]), t->loc);
    case TypeKind::List: return make::list_of(shape(t->kids[0]), t->loc);
    case TypeKind::Unit:
    case TypeKind::Nat:
    case TypeKind::Real:
    case TypeKind::Point:
    case TypeKind::Obstacle:
    case TypeKind::Prop: return t;
    }
    return t;
}

TypeClass classify(const TypePtr& t) {
    auto both = [&]() {
        return classify(t->kids[0]) == TypeClass::Parameter && classify(t->kids[1]) == TypeClass::Parameter
                   ? TypeClass::Parameter
                   : TypeClass::Linear;
    };
    switch (t->kind) {
    case TypeKind::See:
    case TypeKind::At:
    case TypeKind::Safe:
    case TypeKind::LinPi: return TypeClass::Linear;
    case TypeKind::Unit:
    case TypeKind::Bang:
    case TypeKind::Nat:
    case TypeKind::Real:
    case TypeKind::Point:
    case TypeKind::Obstacle:
    case TypeKind::Prop: return TypeClass::Parameter;
    case TypeKind::List: return classify(t->kids[0]);
    case TypeKind::LinTensor:
    case TypeKind::ParamPi:
    case TypeKind::Sum: return both();
    }
    return TypeClass::Linear;
}

std::size_t node_count(const TypePtr& t) {
    std::size_t n = 1;
    for (const auto& k : t->kids) n += node_count(k);
    return n;
}

} // namespace hydranav::syntax
