#include <fmt/format.h>

#include "hydranav/syntax.hpp"

namespace hydranav::syntax {

namespace {

std::string real_text(double v) {
    auto s = fmt::format("{}", v);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

// Term precedence: 0 = binders (lambda/let/case), 1 = application, 2 = prefix, 3 = atom.
int term_level(const TermPtr& m) {
    switch (m->kind) {
    case TermKind::Lam:
    case TermKind::LamPrime:
    case TermKind::LetPair:
    case TermKind::Case: return 0;
    case TermKind::App:
    case TermKind::AppAt: return 1;
    case TermKind::Force:
    case TermKind::ForcePrime:
    case TermKind::Lift:
    case TermKind::Inl:
    case TermKind::Inr: return 2;
    default: return 3;
    }
}

// Type precedence: 0 = arrows, 1 = sum, 2 = tensor, 3 = bang, 4 = atom.
int type_level(const TypePtr& t) {
    switch (t->kind) {
    case TypeKind::LinPi:
    case TypeKind::ParamPi: return 0;
    case TypeKind::Sum: return 1;
    case TypeKind::LinTensor: return 2;
    case TypeKind::Bang: return 3;
    default: return 4;
    }
}

void put_type(std::string& out, const TypePtr& t, int need);

void put_term(std::string& out, const TermPtr& m, int need) {
    bool paren = term_level(m) < need;
    if (paren) out += '(';
    switch (m->kind) {
    case TermKind::Unit: out += "unit"; break;
    case TermKind::Var: out += m->name; break;
    case TermKind::Hole: out += '?' + m->name; break;
    case TermKind::NatLit: out += std::to_string(m->nat); break;
    case TermKind::RealLit: out += real_text(m->x); break;
    case TermKind::PointLit: out += fmt::format("pt({}, {})", real_text(m->x), real_text(m->y)); break;
    case TermKind::Lam:
    case TermKind::LamPrime:
        out += m->kind == TermKind::Lam ? "\\" : "\\'";
        out += m->name + ". ";
        put_term(out, m->kids[0], 0);
        break;
    case TermKind::App:
        put_term(out, m->kids[0], 1);
        out += ' ';
        put_term(out, m->kids[1], 2);
        break;
    case TermKind::AppAt:
        put_term(out, m->kids[0], 1);
        out += " @ ";
        put_term(out, m->kids[1], 2);
        break;
    case TermKind::Force:
    case TermKind::ForcePrime:
    case TermKind::Lift:
    case TermKind::Inl:
    case TermKind::Inr: {
        const char* kw = m->kind == TermKind::Force        ? "force "
                         : m->kind == TermKind::ForcePrime ? "force' "
                         : m->kind == TermKind::Lift       ? "lift "
                         : m->kind == TermKind::Inl        ? "inl "
                                                           : "inr ";
        out += kw;
        put_term(out, m->kids[0], 2);
        break;
    }
    case TermKind::Pair:
        out += '(';
        put_term(out, m->kids[0], 0);
        out += ", ";
        put_term(out, m->kids[1], 0);
        out += ')';
        break;
    case TermKind::LetPair:
        out += fmt::format("let ({}, {}) = ", m->name, m->name2);
        put_term(out, m->kids[0], 1);
        out += " in ";
        put_term(out, m->kids[1], 0);
        break;
    case TermKind::Case:
        out += "case ";
        put_term(out, m->kids[0], 1);
        out += fmt::format(" of inl {} => ", m->name);
        put_term(out, m->kids[1], 1);
        out += fmt::format(" | inr {} => ", m->name2);
        put_term(out, m->kids[2], 0);
        break;
    case TermKind::ListLit:
        out += '[';
        for (std::size_t i = 0; i < m->kids.size(); ++i) {
            if (i) out += ", ";
            put_term(out, m->kids[i], 0);
        }
        out += ']';
        break;
    case TermKind::Annot:
        out += '(';
        put_term(out, m->kids[0], 0);
        out += " : ";
        put_type(out, m->type, 0);
        out += ')';
        break;
    }
    if (paren) out += ')';
}

void put_args(std::string& out, const std::vector<TermPtr>& args) {
    out += '(';
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (i) out += ", ";
        put_term(out, args[i], 0);
    }
    out += ')';
}

void put_type(std::string& out, const TypePtr& t, int need) {
    bool paren = type_level(t) < need;
    if (paren) out += '(';
    switch (t->kind) {
    case TypeKind::See: out += "See"; put_args(out, t->args); break;
    case TypeKind::At: out += "At"; put_args(out, t->args); break;
    case TypeKind::Safe: out += "Safe"; put_args(out, t->args); break;
    case TypeKind::Prop:
        out += t->binder;
        if (!t->args.empty()) put_args(out, t->args);
        break;
    case TypeKind::Unit: out += "Unit"; break;
    case TypeKind::Nat: out += "Nat"; break;
    case TypeKind::Real: out += "Real"; break;
    case TypeKind::Point: out += "Point"; break;
    case TypeKind::Obstacle: out += "Obstacle"; break;
    case TypeKind::List:
        out += "List(";
        put_type(out, t->kids[0], 0);
        out += ')';
        break;
    case TypeKind::Bang:
        out += '!';
        put_type(out, t->kids[0], 3);
        break;
    case TypeKind::LinPi:
    case TypeKind::ParamPi: {
        const char* arrow = t->kind == TypeKind::LinPi ? " -o " : " -> ";
        if (t->binder.empty()) {
            put_type(out, t->kids[0], 1);
        } else {
            out += fmt::format("({} : ", t->binder);
            put_type(out, t->kids[0], 0);
            out += ')';
        }
        out += arrow;
        put_type(out, t->kids[1], 0);
        break;
    }
    case TypeKind::LinTensor:
        if (t->binder.empty()) {
            put_type(out, t->kids[0], 3);
        } else {
            out += fmt::format("({} : ", t->binder);
            put_type(out, t->kids[0], 0);
            out += ')';
        }
        out += " * ";
        put_type(out, t->kids[1], 2);
        break;
    case TypeKind::Sum:
        put_type(out, t->kids[0], 2);
        out += " (+) ";
        put_type(out, t->kids[1], 1);
        break;
    }
    if (paren) out += ')';
}

std::string params_text(const std::vector<Param>& ps) {
    if (ps.empty()) return "";
    std::string out = "(";
    for (std::size_t i = 0; i < ps.size(); ++i) {
        if (i) out += ", ";
        out += ps[i].name + " : " + print(ps[i].type);
    }
    return out + ")";
}

} // namespace

std::string print(const TypePtr& t) {
    std::string out;
    put_type(out, t, 0);
    return out;
}

std::string print(const TermPtr& m) {
    std::string out;
    put_term(out, m, 0);
    return out;
}

std::string print(const Decl& d) {
    switch (d.kind) {
    case DeclKind::TypeAlias: return fmt::format("type {}{} = {} ;", d.name, params_text(d.params), print(d.type));
    case DeclKind::Prop: return fmt::format("prop {}{} ;", d.name, params_text(d.params));
    case DeclKind::Value: {
        auto s = fmt::format("{} : {} ;", d.name, print(d.type));
        if (d.body) s += fmt::format("\n{} = {} ;", d.name, print(*d.body));
        return s;
    }
    }
    return {};
}

std::string print(const Module& m) {
    std::string out;
    for (const auto& d : m.decls) {
        out += print(d);
        out += '\n';
    }
    return out;
}

} // namespace hydranav::syntax
