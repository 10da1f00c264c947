#include "hydranav/ltl.hpp"

#include <cctype>

#include <fmt/format.h>

namespace hydranav::ltl {

namespace make = syntax::make;

UnknownAtom::UnknownAtom(std::size_t offset, std::string name)
    : LtlError(offset, fmt::format("unknown atom '{}': not a type alias of the atom environment", name)),
      name_(std::move(name)) {}

namespace {

constexpr std::string_view kFragment = "the supported fragment is atoms, \\/, /\\, <> and []";

FormulaPtr node(Kind k, std::size_t off, FormulaPtr l = nullptr, FormulaPtr r = nullptr, std::string name = {}) {
    auto f = std::make_shared<Formula>();
    f->kind = k;
    f->offset = off;
    f->left = std::move(l);
    f->right = std::move(r);
    f->name = std::move(name);
    return f;
}

class Parser {
  public:
    explicit Parser(std::string_view s) : s_(s) {}

    FormulaPtr run() {
        auto f = disjunction();
        skip();
        if (i_ < s_.size()) unexpected();
        return f;
    }

  private:
    std::string_view s_;
    std::size_t i_ = 0;

    void skip() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    }
    bool eat(std::string_view tok) {
        skip();
        if (s_.substr(i_, tok.size()) == tok) {
            i_ += tok.size();
            return true;
        }
        return false;
    }

    [[noreturn]] void unexpected() {
        skip();
        if (i_ >= s_.size()) throw LtlError(i_, "unexpected end of formula: expected an atom, <>, [] or '('");
        for (std::string_view op : {"<->", "->", "=>", "!", "~"})
            if (s_.substr(i_, op.size()) == op)
                throw LtlError(i_, fmt::format("unsupported operator '{}': {}", op, kFragment));
        std::size_t j = i_;
        while (j < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[j])) || s_[j] == '_')) ++j;
        if (j > i_) {
            auto word = s_.substr(i_, j - i_);
            for (std::string_view op : {"U", "X", "W", "R", "F", "G", "not"})
                if (word == op) throw LtlError(i_, fmt::format("unsupported operator '{}': {}", op, kFragment));
            throw LtlError(i_, fmt::format("unexpected '{}' at offset {}", word, i_));
        }
        throw LtlError(i_, fmt::format("unexpected '{}' at offset {}", s_[i_], i_));
    }

    FormulaPtr disjunction() {
        auto l = conjunction();
        std::size_t at = (skip(), i_);
        if (eat("\\/")) return node(Kind::Or, at, l, disjunction());
        return l;
    }
    FormulaPtr conjunction() {
        auto l = unary();
        std::size_t at = (skip(), i_);
        if (eat("/\\")) return node(Kind::And, at, l, conjunction());
        return l;
    }
    FormulaPtr unary() {
        skip();
        std::size_t at = i_;
        if (eat("<>")) return node(Kind::Eventually, at, unary());
        if (eat("[]")) return node(Kind::Always, at, unary());
        if (eat("(")) {
            auto f = disjunction();
            if (!eat(")")) {
                skip();
                if (i_ >= s_.size()) throw LtlError(at, "unbalanced '(': no matching ')'");
                unexpected();
            }
            return f;
        }
        std::size_t j = i_;
        while (j < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[j])) || s_[j] == '_' || s_[j] == '\''))
            ++j;
        if (j == i_ || std::isdigit(static_cast<unsigned char>(s_[i_]))) unexpected();
        auto word = s_.substr(i_, j - i_);
        for (std::string_view op : {"U", "X", "W", "R", "F", "G", "not"})
            if (word == op) throw LtlError(i_, fmt::format("unsupported operator '{}': {}", op, kFragment));
        i_ = j;
        return node(Kind::Atom, at, nullptr, nullptr, std::string(word));
    }
};

int level(Kind k) {
    switch (k) {
    case Kind::Or: return 0;
    case Kind::And: return 1;
    case Kind::Eventually:
    case Kind::Always: return 2;
    case Kind::Atom: return 3;
    }
    return 3;
}

void put(std::string& out, const FormulaPtr& f, int need) {
    bool paren = level(f->kind) < need;
    if (paren) out += '(';
    switch (f->kind) {
    case Kind::Atom: out += f->name; break;
    case Kind::Or:
        put(out, f->left, 1);
        out += " \\/ ";
        put(out, f->right, 0);
        break;
    case Kind::And:
        put(out, f->left, 2);
        out += " /\\ ";
        put(out, f->right, 1);
        break;
    case Kind::Eventually:
    case Kind::Always:
        out += f->kind == Kind::Eventually ? "<> " : "[] ";
        put(out, f->left, 2);
        break;
    }
    if (paren) out += ')';
}

} // namespace

FormulaPtr parse_ltl(std::string_view text) { return Parser(text).run(); }

std::string print(const FormulaPtr& f) {
    std::string out;
    put(out, f, 0);
    return out;
}

std::size_t node_count(const FormulaPtr& f) {
    if (!f) return 0;
    return 1 + node_count(f->left) + node_count(f->right);
}

AtomEnv AtomEnv::from_module(syntax::Module m) {
    AtomEnv env;
    for (const auto& d : m.decls)
        if (d.kind == syntax::DeclKind::TypeAlias && d.params.empty()) env.atoms[d.name] = d.type;
    env.module = std::move(m);
    return env;
}

AtomEnv AtomEnv::from_source(std::string_view src) { return from_module(syntax::parse_module(src)); }

syntax::TypePtr translate_ltl(const FormulaPtr& f, const AtomEnv& env) {
    switch (f->kind) {
    case Kind::Atom: {
        auto it = env.atoms.find(f->name);
        if (it == env.atoms.end()) throw UnknownAtom(f->offset, f->name);
        return it->second;
    }
    case Kind::Or: return make::sum(translate_ltl(f->left, env), translate_ltl(f->right, env));
    case Kind::And: return make::tensor("", translate_ltl(f->left, env), translate_ltl(f->right, env));
    case Kind::Eventually: return make::lin_pi("", make::unit_type(), translate_ltl(f->left, env));
    case Kind::Always: return translate_ltl(f->left, env);
    }
    return nullptr;
}

} // namespace hydranav::ltl
