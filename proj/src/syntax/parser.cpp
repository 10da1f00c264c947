#include <cctype>
#include <charconv>
#include <map>

#include <fmt/format.h>

#include "hydranav/syntax.hpp"

namespace hydranav::syntax {

namespace {

enum class Tag {
    Ident,
    NatNum,
    RealNum,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    Equals,
    Backslash,      // \  .
    BackslashPrime, // \'
    Dot,
    At,             // @
    Bang,           // !
    Lolli,          // -o
    Arrow,          // ->
    Star,           // *
    Oplus,          // (+)
    Bar,            // |
    FatArrow,       // =>
    Question,       // ?
    Eof,
};

const char* tag_str(Tag t) {
    switch (t) {
    case Tag::Ident: return "identifier";
    case Tag::NatNum: return "natural number";
    case Tag::RealNum: return "real number";
    case Tag::LParen: return "'('";
    case Tag::RParen: return "')'";
    case Tag::LBracket: return "'['";
    case Tag::RBracket: return "']'";
    case Tag::Comma: return "','";
    case Tag::Semi: return "';'";
    case Tag::Colon: return "':'";
    case Tag::Equals: return "'='";
    case Tag::Backslash: return "'\\'";
    case Tag::BackslashPrime: return "'\\''";
    case Tag::Dot: return "'.'";
    case Tag::At: return "'@'";
    case Tag::Bang: return "'!'";
    case Tag::Lolli: return "'-o'";
    case Tag::Arrow: return "'->'";
    case Tag::Star: return "'*'";
    case Tag::Oplus: return "'(+)'";
    case Tag::Bar: return "'|'";
    case Tag::FatArrow: return "'=>'";
    case Tag::Question: return "'?'";
    case Tag::Eof: return "end of input";
    }
    return "?";
}

struct Tok {
    Tag tag = Tag::Eof;
    std::string text;
    Loc loc;
};

const std::set<std::string>& keywords() {
    static const std::set<std::string> k = {
        "unit",   "force", "force'", "lift", "let",  "in",   "case", "of",    "inl",   "inr",      "pt",
        "type",   "prop",  "Unit",   "Nat",  "Real", "Point", "Obstacle", "List", "See", "At", "Safe",
    };
    return k;
}

std::vector<Tok> lex(std::string_view src) {
    std::vector<Tok> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };
    auto push = [&](Tag t, std::size_t len) {
        out.push_back({t, std::string(src.substr(i, len)), {line, col}});
        advance(len);
    };
    while (i < src.size()) {
        char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(1);
            continue;
        }
        if (c == '-' && i + 1 < src.size() && src[i + 1] == '-') {
            while (i < src.size() && src[i] != '\n') advance(1);
            continue;
        }
        auto rest = src.substr(i);
        if (rest.starts_with("(+)")) { push(Tag::Oplus, 3); continue; }
        if (rest.starts_with("-o")) { push(Tag::Lolli, 2); continue; }
        if (rest.starts_with("->")) { push(Tag::Arrow, 2); continue; }
        if (rest.starts_with("=>")) { push(Tag::FatArrow, 2); continue; }
        if (rest.starts_with("\\'")) { push(Tag::BackslashPrime, 2); continue; }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t n = 1;
            while (i + n < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[i + n])) || src[i + n] == '_' || src[i + n] == '\''))
                ++n;
            push(Tag::Ident, n);
            continue;
        }
        bool negative = c == '-' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1]));
        if (negative || std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t n = negative ? 1 : 0;
            bool real = negative;
            while (i + n < src.size() && std::isdigit(static_cast<unsigned char>(src[i + n]))) ++n;
            if (i + n + 1 < src.size() && src[i + n] == '.' && std::isdigit(static_cast<unsigned char>(src[i + n + 1]))) {
                real = true;
                ++n;
                while (i + n < src.size() && std::isdigit(static_cast<unsigned char>(src[i + n]))) ++n;
            }
            if (i + n < src.size() && (src[i + n] == 'e' || src[i + n] == 'E')) {
                std::size_t m = n + 1;
                if (i + m < src.size() && (src[i + m] == '-' || src[i + m] == '+')) ++m;
                if (i + m < src.size() && std::isdigit(static_cast<unsigned char>(src[i + m]))) {
                    real = true;
                    n = m;
                    while (i + n < src.size() && std::isdigit(static_cast<unsigned char>(src[i + n]))) ++n;
                }
            }
            push(real ? Tag::RealNum : Tag::NatNum, n);
            continue;
        }
        Tag t;
        switch (c) {
        case '(': t = Tag::LParen; break;
        case ')': t = Tag::RParen; break;
        case '[': t = Tag::LBracket; break;
        case ']': t = Tag::RBracket; break;
        case ',': t = Tag::Comma; break;
        case ';': t = Tag::Semi; break;
        case ':': t = Tag::Colon; break;
        case '=': t = Tag::Equals; break;
        case '\\': t = Tag::Backslash; break;
        case '.': t = Tag::Dot; break;
        case '@': t = Tag::At; break;
        case '!': t = Tag::Bang; break;
        case '*': t = Tag::Star; break;
        case '|': t = Tag::Bar; break;
        case '?': t = Tag::Question; break;
        default: throw SyntaxError({line, col}, fmt::format("unexpected character '{}'", c));
        }
        push(t, 1);
    }
    out.push_back({Tag::Eof, "", {line, col}});
    return out;
}

struct AliasDef {
    std::vector<Param> params;
    TypePtr body;
};

class Parser {
  public:
    Parser(std::string_view src, const Module* context) : toks_(lex(src)) {
        if (context)
            for (const auto& d : context->decls) remember(d);
    }

    Module module() {
        Module m;
        while (!at(Tag::Eof)) {
            if (is_kw("type")) {
                m.decls.push_back(alias_decl());
            } else if (is_kw("prop")) {
                m.decls.push_back(prop_decl());
            } else {
                value_decl(m);
            }
        }
        return m;
    }

    TypePtr whole_type() {
        auto t = type();
        expect(Tag::Eof, "type");
        return t;
    }

    TermPtr whole_term() {
        auto t = term();
        expect(Tag::Eof, "term");
        return t;
    }

  private:
    std::vector<Tok> toks_;
    std::size_t pos_ = 0;
    std::map<std::string, AliasDef> aliases_;
    std::map<std::string, std::vector<Param>> props_;

    void remember(const Decl& d) {
        if (d.kind == DeclKind::TypeAlias) aliases_[d.name] = {d.params, d.type};
        if (d.kind == DeclKind::Prop) props_[d.name] = d.params;
    }

    const Tok& ahead(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
    bool at(Tag t, std::size_t k = 0) const { return ahead(k).tag == t; }
    bool is_kw(std::string_view kw, std::size_t k = 0) const {
        return ahead(k).tag == Tag::Ident && ahead(k).text == kw;
    }
    Tok next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

    [[noreturn]] void fail(const Tok& t, std::string_view what, std::string_view ctxt) const {
        std::string got = t.tag == Tag::Eof ? "end of input" : fmt::format("'{}'", t.text);
        throw SyntaxError(t.loc, fmt::format("expected {}, got {} while parsing {}", what, got, ctxt));
    }

    Tok expect(Tag t, std::string_view ctxt) {
        if (!at(t)) fail(ahead(), tag_str(t), ctxt);
        return next();
    }

    void expect_kw(std::string_view kw, std::string_view ctxt) {
        if (!is_kw(kw)) fail(ahead(), fmt::format("'{}'", kw), ctxt);
        next();
    }

    std::string ident(std::string_view ctxt) {
        const Tok& t = ahead();
        if (t.tag != Tag::Ident) fail(t, "identifier", ctxt);
        if (keywords().count(t.text))
            throw SyntaxError(t.loc, fmt::format("reserved word '{}' cannot be used as a name", t.text));
        return next().text;
    }

    // Declarations ----------------------------------------------------------------

    std::vector<Param> params(std::string_view ctxt) {
        std::vector<Param> ps;
        if (!at(Tag::LParen)) return ps;
        next();
        while (true) {
            auto name = ident(ctxt);
            expect(Tag::Colon, ctxt);
            ps.push_back({name, type()});
            if (at(Tag::Comma)) {
                next();
                continue;
            }
            expect(Tag::RParen, ctxt);
            break;
        }
        return ps;
    }

    void check_fresh(const Tok& t, const std::string& name) const {
        if (aliases_.count(name) || props_.count(name))
            throw SyntaxError(t.loc, fmt::format("type name '{}' is already declared", name));
    }

    Decl alias_decl() {
        next();
        Decl d;
        d.kind = DeclKind::TypeAlias;
        d.loc = ahead().loc;
        const Tok& nt = ahead();
        d.name = ident("type alias");
        check_fresh(nt, d.name);
        d.params = params("type alias parameters");
        expect(Tag::Equals, "type alias");
        d.type = type();
        expect(Tag::Semi, "type alias");
        remember(d);
        return d;
    }

    Decl prop_decl() {
        next();
        Decl d;
        d.kind = DeclKind::Prop;
        d.loc = ahead().loc;
        const Tok& nt = ahead();
        d.name = ident("proposition");
        check_fresh(nt, d.name);
        d.params = params("proposition parameters");
        expect(Tag::Semi, "proposition");
        remember(d);
        return d;
    }

    void value_decl(Module& m) {
        Tok nt = ahead();
        auto name = ident("declaration");
        if (at(Tag::Colon)) {
            next();
            Decl d;
            d.kind = DeclKind::Value;
            d.name = name;
            d.loc = nt.loc;
            d.type = type();
            expect(Tag::Semi, "declaration");
            m.decls.push_back(std::move(d));
            return;
        }
        if (at(Tag::Equals)) {
            next();
            auto body = term();
            expect(Tag::Semi, "definition");
            for (auto it = m.decls.rbegin(); it != m.decls.rend(); ++it) {
                if (it->kind == DeclKind::Value && it->name == name) {
                    if (it->body)
                        throw SyntaxError(nt.loc, fmt::format("'{}' is already defined", name));
                    it->body = std::move(body);
                    it->body_loc = nt.loc;
                    return;
                }
            }
            throw SyntaxError(nt.loc, fmt::format("definition of '{}' has no preceding signature", name));
        }
        fail(ahead(), "':' or '='", "declaration");
    }

    // Types -------------------------------------------------------------------------

    // `(x :` opens a binder. Returns the tag following the binder's closing paren.
    std::optional<Tag> binder_follow() const {
        if (!(at(Tag::LParen) && at(Tag::Ident, 1) && at(Tag::Colon, 2))) return std::nullopt;
        if (keywords().count(ahead(1).text)) return std::nullopt;
        int depth = 0;
        for (std::size_t k = pos_; k < toks_.size(); ++k) {
            if (toks_[k].tag == Tag::LParen) ++depth;
            if (toks_[k].tag == Tag::RParen && --depth == 0)
                return k + 1 < toks_.size() ? toks_[k + 1].tag : Tag::Eof;
            if (toks_[k].tag == Tag::Eof) break;
        }
        throw SyntaxError(ahead().loc, "unbalanced '(': no matching ')'");
    }

    std::pair<std::string, TypePtr> binder() {
        next();
        auto x = ident("binder");
        expect(Tag::Colon, "binder");
        auto a = type();
        expect(Tag::RParen, "binder");
        return {x, a};
    }

    TypePtr type() {
        Loc l = ahead().loc;
        if (auto f = binder_follow(); f && (*f == Tag::Lolli || *f == Tag::Arrow)) {
            auto [x, a] = binder();
            bool lin = next().tag == Tag::Lolli;
            auto b = type();
            return lin ? make::lin_pi(x, a, b, l) : make::param_pi(x, a, b, l);
        }
        auto left = sum_type();
        if (at(Tag::Lolli) || at(Tag::Arrow)) {
            bool lin = next().tag == Tag::Lolli;
            auto b = type();
            return lin ? make::lin_pi("", left, b, l) : make::param_pi("", left, b, l);
        }
        return left;
    }

    TypePtr sum_type() {
        Loc l = ahead().loc;
        auto left = tensor_type();
        if (at(Tag::Oplus)) {
            next();
            return make::sum(left, sum_type(), l);
        }
        return left;
    }

    TypePtr tensor_type() {
        Loc l = ahead().loc;
        if (auto f = binder_follow()) {
            if (*f != Tag::Star) {
                if (*f == Tag::Lolli || *f == Tag::Arrow)
                    throw SyntaxError(l, "dependent function type must be parenthesized here");
                fail(ahead(), "'-o', '->' or '*' after binder", "type");
            }
            auto [x, a] = binder();
            next();
            return make::tensor(x, a, tensor_type(), l);
        }
        auto left = bang_type();
        if (at(Tag::Star)) {
            next();
            return make::tensor("", left, tensor_type(), l);
        }
        return left;
    }

    TypePtr bang_type() {
        Loc l = ahead().loc;
        if (at(Tag::Bang)) {
            next();
            return make::bang(bang_type(), l);
        }
        return atom_type();
    }

    TermPtr paren_arg(std::string_view ctxt) {
        expect(Tag::LParen, ctxt);
        auto t = term();
        expect(Tag::RParen, ctxt);
        return t;
    }

    TypePtr atom_type() {
        const Tok& t = ahead();
        Loc l = t.loc;
        if (t.tag == Tag::LParen) {
            next();
            auto inner = type();
            expect(Tag::RParen, "parenthesized type");
            return inner;
        }
        if (t.tag != Tag::Ident) fail(t, "type", "type");
        std::string n = t.text;
        if (n == "Unit") { next(); return make::unit_type(l); }
        if (n == "Nat") { next(); return make::base(TypeKind::Nat, l); }
        if (n == "Real") { next(); return make::base(TypeKind::Real, l); }
        if (n == "Point") { next(); return make::base(TypeKind::Point, l); }
        if (n == "Obstacle") { next(); return make::base(TypeKind::Obstacle, l); }
        if (n == "List") {
            next();
            expect(Tag::LParen, "List");
            auto e = type();
            expect(Tag::RParen, "List");
            return make::list_of(e, l);
        }
        if (n == "See") { next(); return make::see(paren_arg("See"), l); }
        if (n == "At") { next(); return make::at(paren_arg("At"), l); }
        if (n == "Safe") { next(); return make::safe(paren_arg("Safe"), l); }
        if (keywords().count(n)) fail(t, "type", "type");
        next();
        std::vector<TermPtr> args;
        if (at(Tag::LParen)) {
            next();
            while (true) {
                args.push_back(term());
                if (at(Tag::Comma)) {
                    next();
                    continue;
                }
                expect(Tag::RParen, "type arguments");
                break;
            }
        }
        if (auto it = props_.find(n); it != props_.end()) {
            if (args.size() != it->second.size())
                throw SyntaxError(l, fmt::format("proposition '{}' expects {} argument(s), got {}", n,
                                                 it->second.size(), args.size()));
            return make::prop(n, std::move(args), l);
        }
        if (auto it = aliases_.find(n); it != aliases_.end()) {
            const auto& def = it->second;
            if (args.size() != def.params.size())
                throw SyntaxError(l, fmt::format("type alias '{}' expects {} argument(s), got {}", n,
                                                 def.params.size(), args.size()));
            return expand(def, args);
        }
        throw SyntaxError(l, fmt::format("unknown type '{}'", n));
    }

    static TypePtr expand(const AliasDef& def, const std::vector<TermPtr>& args) {
        // Rename parameters apart first so sequential substitution cannot capture.
        std::set<std::string> avoid;
        for (const auto& a : args)
            for (const auto& v : free_vars(a)) avoid.insert(v);
        for (const auto& v : free_vars(def.body)) avoid.insert(v);
        TypePtr body = def.body;
        std::vector<std::string> tmp;
        for (const auto& p : def.params) {
            auto t = fresh_name(p.name + "#", avoid);
            avoid.insert(t);
            body = subst(body, p.name, make::var(t));
            tmp.push_back(t);
        }
        for (std::size_t i = 0; i < args.size(); ++i) body = subst(body, tmp[i], args[i]);
        return body;
    }

    // Terms -------------------------------------------------------------------------

    TermPtr term() {
        const Tok& t = ahead();
        Loc l = t.loc;
        if (t.tag == Tag::Backslash || t.tag == Tag::BackslashPrime) {
            bool prime = t.tag == Tag::BackslashPrime;
            next();
            auto x = ident("lambda binder");
            expect(Tag::Dot, "lambda");
            auto body = term();
            return prime ? make::lam_prime(x, body, l) : make::lam(x, body, l);
        }
        if (is_kw("let")) {
            next();
            expect(Tag::LParen, "let");
            auto x = ident("let binder");
            expect(Tag::Comma, "let");
            auto y = ident("let binder");
            expect(Tag::RParen, "let");
            expect(Tag::Equals, "let");
            auto scrut = term();
            expect_kw("in", "let");
            auto body = term();
            return make::let_pair(x, y, scrut, body, l);
        }
        if (is_kw("case")) {
            next();
            auto scrut = term();
            expect_kw("of", "case");
            expect_kw("inl", "case");
            auto x = ident("case binder");
            expect(Tag::FatArrow, "case");
            auto left = term();
            expect(Tag::Bar, "case");
            expect_kw("inr", "case");
            auto y = ident("case binder");
            expect(Tag::FatArrow, "case");
            auto right = term();
            return make::case_of(scrut, x, left, y, right, l);
        }
        return application();
    }

    bool starts_prefix() const {
        const Tok& t = ahead();
        switch (t.tag) {
        case Tag::Ident:
            return !keywords().count(t.text) || t.text == "unit" || t.text == "force" || t.text == "force'" ||
                   t.text == "lift" || t.text == "inl" || t.text == "inr" || t.text == "pt";
        case Tag::NatNum:
        case Tag::RealNum:
        case Tag::LParen:
        case Tag::LBracket:
        case Tag::Question: return true;
        default: return false;
        }
    }

    TermPtr application() {
        Loc l = ahead().loc;
        auto f = prefix();
        while (true) {
            if (at(Tag::At)) {
                next();
                f = make::app_at(f, prefix(), l);
            } else if (starts_prefix()) {
                f = make::app(f, prefix(), l);
            } else {
                return f;
            }
        }
    }

    TermPtr prefix() {
        Loc l = ahead().loc;
        if (is_kw("force")) { next(); return make::force(prefix(), l); }
        if (is_kw("force'")) { next(); return make::force_prime(prefix(), l); }
        if (is_kw("lift")) { next(); return make::lift(prefix(), l); }
        if (is_kw("inl")) { next(); return make::inl(prefix(), l); }
        if (is_kw("inr")) { next(); return make::inr(prefix(), l); }
        return atom();
    }

    TermPtr atom() {
        const Tok& t = ahead();
        Loc l = t.loc;
        switch (t.tag) {
        case Tag::NatNum: {
            next();
            std::uint64_t v = 0;
            auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
            if (ec != std::errc()) throw SyntaxError(l, "natural number literal out of range");
            return make::nat(v, l);
        }
        case Tag::RealNum: next(); return make::real(std::stod(t.text), l);
        case Tag::Question: {
            next();
            return make::hole(ident("hole name"), l);
        }
        case Tag::LBracket: {
            next();
            std::vector<TermPtr> elems;
            if (!at(Tag::RBracket)) {
                while (true) {
                    elems.push_back(term());
                    if (at(Tag::Comma)) {
                        next();
                        continue;
                    }
                    break;
                }
            }
            expect(Tag::RBracket, "list literal");
            return make::list(std::move(elems), l);
        }
        case Tag::LParen: {
            next();
            auto first = term();
            if (at(Tag::Comma)) {
                next();
                auto second = term();
                expect(Tag::RParen, "pair");
                return make::pair(first, second, l);
            }
            if (at(Tag::Colon)) {
                next();
                auto a = type();
                expect(Tag::RParen, "annotation");
                return make::annot(first, a, l);
            }
            expect(Tag::RParen, "parenthesized term");
            return first;
        }
        case Tag::Ident: {
            if (t.text == "unit") {
                next();
                return make::unit(l);
            }
            if (t.text == "pt") {
                next();
                expect(Tag::LParen, "point literal");
                double x = point_coord();
                expect(Tag::Comma, "point literal");
                double y = point_coord();
                expect(Tag::RParen, "point literal");
                return make::point(x, y, l);
            }
            return make::var(ident("term"), l);
        }
        default: fail(t, "term", "term");
        }
    }

    double point_coord() {
        const Tok& t = ahead();
        if (t.tag != Tag::NatNum && t.tag != Tag::RealNum) fail(t, "number", "point literal");
        next();
        return std::stod(t.text);
    }
};

} // namespace

Module parse_module(std::string_view source) { return Parser(source, nullptr).module(); }

TypePtr parse_type(std::string_view source, const Module* context) {
    return Parser(source, context).whole_type();
}

TermPtr parse_term(std::string_view source, const Module* context) {
    return Parser(source, context).whole_term();
}

} // namespace hydranav::syntax
