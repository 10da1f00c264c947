#include <fmt/format.h>

#include "hydranav/typechecker.hpp"

namespace hydranav::check {

using syntax::TermKind;
using syntax::TypeKind;
namespace make = syntax::make;

namespace {

[[noreturn]] void fail(ErrorCode code, Loc loc, std::string msg) { throw CheckError(code, loc, std::move(msg)); }

std::string show(const TypePtr& t) { return syntax::print(t); }

std::string describe(const TermPtr& m) {
    auto s = syntax::print(m);
    if (s.size() > 60) s = s.substr(0, 57) + "...";
    return s;
}

// Reduction fuel for parameter-level normalization; untyped λ′ terms can diverge.
constexpr int kFuel = 10000;

TermPtr norm_term(const TermPtr& m, int& fuel);

TypePtr norm_type(const TypePtr& t, int& fuel) {
    if (!t) return t;
    auto c = std::make_shared<syntax::Type>(*t);
    for (auto& a : c->args) a = norm_term(a, fuel);
    for (auto& k : c->kids) k = norm_type(k, fuel);
    return c;
}

TermPtr norm_term(const TermPtr& m, int& fuel) {
    if (!m) return m;
    auto c = std::make_shared<syntax::Term>(*m);
    for (auto& k : c->kids) k = norm_term(k, fuel);
    if (c->kind == TermKind::Annot) c->type = norm_type(c->type, fuel);
    if (fuel <= 0) return c;
    if (c->kind == TermKind::AppAt && c->kids[0]->kind == TermKind::LamPrime) {
        --fuel;
        const auto& lam = c->kids[0];
        return norm_term(syntax::subst(lam->kids[0], lam->name, c->kids[1]), fuel);
    }
    if (c->kind == TermKind::ForcePrime && c->kids[0]->kind == TermKind::Lift) {
        --fuel;
        return c->kids[0]->kids[0];
    }
    return c;
}

std::set<std::string> context_names(const Context& ctx) {
    std::set<std::string> s;
    for (const auto& e : ctx.entries()) s.insert(e.name);
    return s;
}

} // namespace

TermPtr normalize(const TermPtr& m) {
    int fuel = kFuel;
    return norm_term(m, fuel);
}

TypePtr normalize(const TypePtr& t) {
    int fuel = kFuel;
    return norm_type(t, fuel);
}

Index binder_index(const TypePtr& t) { return syntax::is_parameter(t) ? Index::Omega : Index::One; }

void Signature::add_value(const std::string& name, TypePtr type) { values_[name] = std::move(type); }

void Signature::add_prop(const std::string& name, std::vector<syntax::Param> params) {
    props_[name] = std::move(params);
}

const TypePtr* Signature::value(std::string_view name) const {
    auto it = values_.find(name);
    return it == values_.end() ? nullptr : &it->second;
}

const std::vector<syntax::Param>* Signature::prop(std::string_view name) const {
    auto it = props_.find(name);
    return it == props_.end() ? nullptr : &it->second;
}

bool Checker::defeq(const TypePtr& a, const TypePtr& b) const {
    return syntax::alpha_equal(normalize(a), normalize(b));
}

std::pair<TypePtr, UsageVector> Checker::lookup_var(const Context& ctx, const TermPtr& m) const {
    UsageVector u(ctx);
    if (auto i = ctx.lookup(m->name)) {
        u[*i] = Index::One;
        return {ctx[*i].type, u};
    }
    if (auto t = sig_.value(m->name)) return {*t, u};
    fail(ErrorCode::UnboundVariable, m->loc, fmt::format("unbound variable '{}'", m->name));
}

void Checker::require_parameter_term(const Context& ctx, const UsageVector& u, Loc loc, std::string_view what) const {
    for (std::size_t i = 0; i < u.size(); ++i) {
        const auto& e = ctx[i];
        if (u[i] != Index::Zero && e.budget == Index::One && !syntax::is_parameter(e.type))
            fail(ErrorCode::ParameterContextViolation, loc,
                 fmt::format("{} is a parameter term, but it uses '{}' : {} at index 1; parameter contexts allow "
                             "index 1 only on parameter types",
                             what, e.name, show(e.type)));
    }
}

void Checker::close_binders(const Context& inner, const UsageVector& u, std::size_t n, Loc loc) const {
    for (std::size_t i = inner.size() - n; i < inner.size(); ++i) {
        const auto& e = inner[i];
        if (!fits(u[i], e.budget))
            fail(ErrorCode::LinearityViolation, loc,
                 fmt::format("variable '{}' : {} used {} times, declared budget {}", e.name, show(e.type),
                             to_string(u[i]), to_string(e.budget)));
        if (e.budget == Index::One && u[i] == Index::Zero && !syntax::is_parameter(e.type))
            fail(ErrorCode::LinearityViolation, loc,
                 fmt::format("linear variable '{}' : {} is discarded: used 0 times, declared budget 1", e.name,
                             show(e.type)));
    }
}

TypePtr Checker::substitute_shape(const Context& ctx, const TypePtr& body, const std::string& binder,
                                  const TermPtr& arg, const UsageVector& arg_usage, Loc loc) const {
    if (binder.empty() || !syntax::free_vars(body).count(binder)) return body;
    if (arg->kind == TermKind::Var) return syntax::subst(body, binder, arg);
    for (std::size_t i = 0; i < arg_usage.size(); ++i) {
        const auto& e = ctx[i];
        if (arg_usage[i] != Index::Zero && e.budget == Index::One && !syntax::is_parameter(e.type))
            fail(ErrorCode::ShapeViolation, loc,
                 fmt::format("type {} depends on '{}', whose value '{}' carries state-level data from '{}' : {}; "
                             "types may depend only on the shape of linear terms",
                             show(body), binder, describe(arg), e.name, show(e.type)));
    }
    return syntax::subst(body, binder, normalize(arg));
}

// Extends `ctx` with the given binders (renaming any that would shadow a context
// name or a free variable of `expected`), checks `body` against `expected`, and
// verifies each binder's usage against its budget.
UsageVector Checker::bind_and_check(const Context& ctx, const std::vector<std::pair<std::string, TypePtr>>& binders,
                                    const TermPtr& body, const TypePtr& expected, Loc loc,
                                    std::vector<std::string>* renamed) const {
    auto avoid = context_names(ctx);
    for (const auto& v : syntax::free_vars(expected)) avoid.insert(v);
    Context inner = ctx;
    TermPtr b = body;
    for (const auto& [name, type] : binders) {
        auto n = syntax::fresh_name(name, avoid);
        if (n != name) b = syntax::subst(b, name, make::var(n));
        avoid.insert(n);
        inner = inner.extended(n, type, binder_index(type));
        if (renamed) renamed->push_back(n);
    }
    auto u = check_term(inner, b, expected);
    close_binders(inner, u, binders.size(), loc);
    return u.popped(binders.size());
}

UsageVector Checker::check_term(const Context& ctx, const TermPtr& m, const TypePtr& expected) const {
    auto a = normalize(expected);
    switch (m->kind) {
    case TermKind::Lam: {
        if (a->kind != TypeKind::LinPi) {
            if (a->kind == TypeKind::ParamPi)
                fail(ErrorCode::TypeMismatch, m->loc,
                     fmt::format("expected {}, a parameter function; write it with \\'", show(a)));
            fail(ErrorCode::TypeMismatch, m->loc, fmt::format("lambda checked against non-function type {}", show(a)));
        }
        // Rename the lambda binder apart, then align the codomain binder with it.
        auto avoid = context_names(ctx);
        for (const auto& v : syntax::free_vars(a)) avoid.insert(v);
        auto x = syntax::fresh_name(m->name, avoid);
        auto body = x == m->name ? m->kids[0] : syntax::subst(m->kids[0], m->name, make::var(x));
        auto cod = a->binder.empty() ? a->kids[1] : syntax::subst(a->kids[1], a->binder, make::var(x));
        Context inner = ctx.extended(x, a->kids[0], binder_index(a->kids[0]));
        auto u = check_term(inner, body, cod);
        close_binders(inner, u, 1, m->loc);
        return u.popped();
    }
    case TermKind::LamPrime: {
        if (a->kind != TypeKind::ParamPi) {
            if (a->kind == TypeKind::LinPi)
                fail(ErrorCode::TypeMismatch, m->loc,
                     fmt::format("expected {}, a linear function; write it with \\", show(a)));
            fail(ErrorCode::TypeMismatch, m->loc,
                 fmt::format("parameter lambda checked against non-function type {}", show(a)));
        }
        auto avoid = context_names(ctx);
        for (const auto& v : syntax::free_vars(a)) avoid.insert(v);
        auto x = syntax::fresh_name(m->name, avoid);
        auto body = x == m->name ? m->kids[0] : syntax::subst(m->kids[0], m->name, make::var(x));
        auto cod = a->binder.empty() ? a->kids[1] : syntax::subst(a->kids[1], a->binder, make::var(x));
        Context inner = ctx.extended(x, a->kids[0], Index::Omega);
        auto u = check_term(inner, body, cod);
        if (syntax::is_parameter(cod)) require_parameter_term(inner, u, m->loc, "the body of this \\' abstraction");
        close_binders(inner, u, 1, m->loc);
        return u.popped();
    }
    case TermKind::Pair: {
        if (a->kind != TypeKind::LinTensor) break;
        auto u1 = check_term(ctx, m->kids[0], a->kids[0]);
        auto right = substitute_shape(ctx, a->kids[1], a->binder, m->kids[0], u1, m->loc);
        auto u2 = check_term(ctx, m->kids[1], right);
        return ctx_add(u1, u2);
    }
    case TermKind::LetPair: {
        auto scrut = infer_term(ctx, m->kids[0]);
        auto t = normalize(scrut.type);
        if (t->kind != TypeKind::LinTensor)
            fail(ErrorCode::TypeMismatch, m->kids[0]->loc,
                 fmt::format("let-pair scrutinee has type {}, which is not a tensor", show(t)));
        auto avoid = context_names(ctx);
        for (const auto& v : syntax::free_vars(a)) avoid.insert(v);
        auto x = syntax::fresh_name(m->name, avoid);
        avoid.insert(x);
        auto y = syntax::fresh_name(m->name2, avoid);
        auto body = m->kids[1];
        if (x != m->name) body = syntax::subst(body, m->name, make::var(x));
        if (y != m->name2) body = syntax::subst(body, m->name2, make::var(y));
        auto right = t->binder.empty() ? t->kids[1] : syntax::subst(t->kids[1], t->binder, make::var(x));
        Context inner = ctx.extended(x, t->kids[0], binder_index(t->kids[0]))
                            .extended(y, right, binder_index(right));
        auto u = check_term(inner, body, a);
        close_binders(inner, u, 2, m->loc);
        return ctx_add(scrut.usage, u.popped(2));
    }
    case TermKind::Case: {
        auto scrut = infer_term(ctx, m->kids[0]);
        auto t = normalize(scrut.type);
        if (t->kind != TypeKind::Sum)
            fail(ErrorCode::TypeMismatch, m->kids[0]->loc,
                 fmt::format("case scrutinee has type {}, which is not a sum", show(t)));
        auto ul = bind_and_check(ctx, {{m->name, t->kids[0]}}, m->kids[1], a, m->kids[1]->loc);
        auto ur = bind_and_check(ctx, {{m->name2, t->kids[1]}}, m->kids[2], a, m->kids[2]->loc);
        UsageVector joined = ul;
        for (std::size_t i = 0; i < ul.size(); ++i) {
            if (ctx[i].budget == Index::One && ul[i] != ur[i])
                fail(ErrorCode::BranchUsageMismatch, m->loc,
                     fmt::format("case branches use '{}' differently: {} in the inl branch, {} in the inr branch",
                                 ctx[i].name, to_string(ul[i]), to_string(ur[i])));
            if (ul[i] != ur[i])
                joined[i] = ul[i] == Index::Zero ? ur[i] : (ur[i] == Index::Zero ? ul[i] : Index::Omega);
        }
        return ctx_add(scrut.usage, joined);
    }
    case TermKind::Inl:
    case TermKind::Inr: {
        if (a->kind != TypeKind::Sum)
            fail(ErrorCode::TypeMismatch, m->loc, fmt::format("injection checked against non-sum type {}", show(a)));
        return check_term(ctx, m->kids[0], a->kids[m->kind == TermKind::Inl ? 0 : 1]);
    }
    case TermKind::Lift: {
        if (a->kind != TypeKind::Bang) break;
        auto u = check_term(ctx, m->kids[0], a->kids[0]);
        for (std::size_t i = 0; i < u.size(); ++i)
            if (u[i] != Index::Zero && ctx[i].budget != Index::Omega)
                fail(ErrorCode::LiftOfLinear, m->loc,
                     fmt::format("lift uses '{}' : {} with budget {}; a lifted term may only use unrestricted "
                                 "(index ω) variables",
                                 ctx[i].name, show(ctx[i].type), to_string(ctx[i].budget)));
        return u.scaled(Index::Omega);
    }
    case TermKind::Hole: {
        if (!opts_.allow_holes)
            fail(ErrorCode::HoleNotAllowed, m->loc,
                 fmt::format("hole '?{}' of type {} (holes require --allow-holes)", m->name, show(a)));
        return UsageVector(ctx);
    }
    case TermKind::ListLit: {
        if (a->kind != TypeKind::List) break;
        UsageVector u(ctx);
        for (const auto& e : m->kids) u = ctx_add(u, check_term(ctx, e, a->kids[0]));
        return u;
    }
    default: break;
    }
    auto inf = infer_term(ctx, m);
    if (!defeq(inf.type, a))
        fail(ErrorCode::TypeMismatch, m->loc,
             fmt::format("'{}' has type {}, expected {}", describe(m), show(normalize(inf.type)), show(a)));
    return inf.usage;
}

Inferred Checker::infer_term(const Context& ctx, const TermPtr& m) const {
    switch (m->kind) {
    case TermKind::Unit: return {make::unit_type(m->loc), UsageVector(ctx)};
    case TermKind::NatLit: return {make::base(TypeKind::Nat), UsageVector(ctx)};
    case TermKind::RealLit: return {make::base(TypeKind::Real), UsageVector(ctx)};
    case TermKind::PointLit: return {make::base(TypeKind::Point), UsageVector(ctx)};
    case TermKind::Var: {
        auto [t, u] = lookup_var(ctx, m);
        return {t, u};
    }
    case TermKind::App: {
        auto f = infer_term(ctx, m->kids[0]);
        auto t = normalize(f.type);
        if (t->kind == TypeKind::ParamPi)
            fail(ErrorCode::NotAFunction, m->loc,
                 fmt::format("'{}' has parameter function type {}; apply it with @", describe(m->kids[0]), show(t)));
        if (t->kind != TypeKind::LinPi)
            fail(ErrorCode::NotAFunction, m->loc,
                 fmt::format("'{}' has type {}, which is not a function", describe(m->kids[0]), show(t)));
        auto u2 = check_term(ctx, m->kids[1], t->kids[0]);
        auto cod = substitute_shape(ctx, t->kids[1], t->binder, m->kids[1], u2, m->loc);
        return {cod, ctx_add(f.usage, u2)};
    }
    case TermKind::AppAt: {
        auto f = infer_term(ctx, m->kids[0]);
        auto t = normalize(f.type);
        if (t->kind == TypeKind::LinPi)
            fail(ErrorCode::NotAFunction, m->loc,
                 fmt::format("'{}' has linear function type {}; apply it by juxtaposition", describe(m->kids[0]),
                             show(t)));
        if (t->kind != TypeKind::ParamPi)
            fail(ErrorCode::NotAFunction, m->loc,
                 fmt::format("'{}' has type {}, which is not a parameter function", describe(m->kids[0]), show(t)));
        auto u2 = check_term(ctx, m->kids[1], t->kids[0]);
        require_parameter_term(ctx, u2, m->kids[1]->loc, "the argument of @");
        auto cod = t->binder.empty() ? t->kids[1] : syntax::subst(t->kids[1], t->binder, normalize(m->kids[1]));
        return {cod, ctx_add(f.usage, u2)};
    }
    case TermKind::Force:
    case TermKind::ForcePrime: {
        auto inner = infer_term(ctx, m->kids[0]);
        auto t = normalize(inner.type);
        bool prime = m->kind == TermKind::ForcePrime;
        if (t->kind != TypeKind::Bang)
            fail(ErrorCode::TypeMismatch, m->loc,
                 fmt::format("{} expects a !-type, got {}", prime ? "force'" : "force", show(t)));
        if (prime) {
            require_parameter_term(ctx, inner.usage, m->loc, "the operand of force'");
            return {syntax::shape(t->kids[0]), inner.usage};
        }
        return {t->kids[0], inner.usage};
    }
    case TermKind::Lift: {
        auto inner = infer_term(ctx, m->kids[0]);
        auto bang = make::bang(inner.type, m->loc);
        return {bang, check_term(ctx, m, bang)};
    }
    case TermKind::Pair: {
        auto l = infer_term(ctx, m->kids[0]);
        auto r = infer_term(ctx, m->kids[1]);
        return {make::tensor("", l.type, r.type, m->loc), ctx_add(l.usage, r.usage)};
    }
    case TermKind::LetPair: {
        auto scrut = infer_term(ctx, m->kids[0]);
        auto t = normalize(scrut.type);
        if (t->kind != TypeKind::LinTensor)
            fail(ErrorCode::TypeMismatch, m->kids[0]->loc,
                 fmt::format("let-pair scrutinee has type {}, which is not a tensor", show(t)));
        auto avoid = context_names(ctx);
        auto x = syntax::fresh_name(m->name, avoid);
        avoid.insert(x);
        auto y = syntax::fresh_name(m->name2, avoid);
        auto body = m->kids[1];
        if (x != m->name) body = syntax::subst(body, m->name, make::var(x));
        if (y != m->name2) body = syntax::subst(body, m->name2, make::var(y));
        auto right = t->binder.empty() ? t->kids[1] : syntax::subst(t->kids[1], t->binder, make::var(x));
        Context inner = ctx.extended(x, t->kids[0], binder_index(t->kids[0]))
                            .extended(y, right, binder_index(right));
        auto res = infer_term(inner, body);
        auto fv = syntax::free_vars(res.type);
        if (fv.count(x) || fv.count(y))
            fail(ErrorCode::CannotInfer, m->loc,
                 fmt::format("the type {} of this let body mentions its binders; annotate the let", show(res.type)));
        close_binders(inner, res.usage, 2, m->loc);
        return {res.type, ctx_add(scrut.usage, res.usage.popped(2))};
    }
    case TermKind::Annot: {
        check_type(ctx, m->type);
        return {m->type, check_term(ctx, m->kids[0], m->type)};
    }
    case TermKind::ListLit: {
        if (m->kids.empty()) break;
        auto first = infer_term(ctx, m->kids[0]);
        auto u = first.usage;
        for (std::size_t i = 1; i < m->kids.size(); ++i) u = ctx_add(u, check_term(ctx, m->kids[i], first.type));
        return {make::list_of(first.type, m->loc), u};
    }
    default: break;
    }
    fail(ErrorCode::CannotInfer, m->loc, fmt::format("cannot infer a type for '{}'; add an annotation", describe(m)));
}

void Checker::check_type(const Context& ctx, const TypePtr& a) const {
    auto arg_check = [&](const TermPtr& arg, TypeKind sort) {
        check_term(ctx, arg, make::base(sort));
    };
    switch (a->kind) {
    case TypeKind::See: arg_check(a->args[0], TypeKind::Nat); return;
    case TypeKind::At: arg_check(a->args[0], TypeKind::Point); return;
    case TypeKind::Safe: {
        if (a->args[0]->kind == TermKind::Hole) return;
        infer_term(ctx, a->args[0]);
        return;
    }
    case TypeKind::Prop: {
        const auto* params = sig_.prop(a->binder);
        if (!params) fail(ErrorCode::IllFormedType, a->loc, fmt::format("unknown proposition '{}'", a->binder));
        if (params->size() != a->args.size())
            fail(ErrorCode::IllFormedType, a->loc,
                 fmt::format("proposition '{}' expects {} argument(s), got {}", a->binder, params->size(),
                             a->args.size()));
        std::vector<TypePtr> types;
        for (const auto& p : *params) types.push_back(p.type);
        for (std::size_t i = 0; i < params->size(); ++i) {
            check_term(ctx, a->args[i], types[i]);
            for (std::size_t j = i + 1; j < types.size(); ++j)
                types[j] = syntax::subst(types[j], (*params)[i].name, a->args[i]);
        }
        return;
    }
    case TypeKind::Bang:
    case TypeKind::List: check_type(ctx, a->kids[0]); return;
    case TypeKind::Sum:
        check_type(ctx, a->kids[0]);
        check_type(ctx, a->kids[1]);
        return;
    case TypeKind::LinPi:
    case TypeKind::LinTensor:
    case TypeKind::ParamPi: {
        check_type(ctx, a->kids[0]);
        if (a->kind == TypeKind::ParamPi && !syntax::is_parameter(a->kids[0]))
            fail(ErrorCode::IllFormedType, a->kids[0]->loc,
                 fmt::format("the domain {} of a parameter function must be a parameter type", show(a->kids[0])));
        Context inner = a->binder.empty() ? ctx : ctx.extended(a->binder, a->kids[0], Index::Zero);
        check_type(inner, a->kids[1]);
        return;
    }
    case TypeKind::Unit:
    case TypeKind::Nat:
    case TypeKind::Real:
    case TypeKind::Point:
    case TypeKind::Obstacle: return;
    }
}

} // namespace hydranav::check
