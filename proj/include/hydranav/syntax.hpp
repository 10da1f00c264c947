#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hydranav::syntax {

struct Loc {
    int line = 0;
    int col = 0;
};

struct Term;
struct Type;
using TermPtr = std::shared_ptr<const Term>;
using TypePtr = std::shared_ptr<const Type>;

// Terms of the calculus. State terms and parameter terms share one node type;
// which layer a node lives in is decided by the checker, not the parser.
enum class TermKind {
    Unit,
    Var,
    Lam,        // \x. M
    App,        // M N
    Force,      // force M
    ForcePrime, // force' R
    Lift,       // lift M
    Pair,       // (M, N)
    LetPair,    // let (x, y) = N in M
    LamPrime,   // \'x. R
    AppAt,      // R1 @ R2
    Inl,
    Inr,
    Case,       // case M of inl x => N | inr y => L
    Hole,       // ?name
    NatLit,
    RealLit,
    PointLit,   // pt(x, y)
    ListLit,    // [M, ...]
    Annot,      // (M : A)
};

struct Term {
    TermKind kind = TermKind::Unit;
    Loc loc;
    // Var / Hole: the name. Lam / LamPrime: binder. LetPair / Case: first binder.
    std::string name;
    // LetPair / Case: second binder.
    std::string name2;
    // Children in source order:
    //   App, AppAt, Pair: {fn/left, arg/right}; LetPair: {scrutinee, body};
    //   Case: {scrutinee, left branch, right branch}; Lam/LamPrime: {body};
    //   Force/ForcePrime/Lift/Inl/Inr/Annot: {operand}; ListLit: elements.
    std::vector<TermPtr> kids;
    TypePtr type; // Annot only
    std::uint64_t nat = 0;
    double x = 0.0; // RealLit value, PointLit first coordinate
    double y = 0.0; // PointLit second coordinate
};

enum class TypeKind {
    See,       // simple: See(n)
    At,        // simple: At(x)
    Safe,      // simple: Safe(c)
    Unit,
    Bang,      // !A
    LinPi,     // (x : A) -o B
    LinTensor, // (x : A) * B
    ParamPi,   // (x : P) -> B
    Sum,       // A (+) B
    Nat,
    Real,
    Point,
    Obstacle,
    List,      // List(A)
    Prop,      // opaque parameter-level proposition Name(args)
};

struct Type {
    TypeKind kind = TypeKind::Unit;
    Loc loc;
    // LinPi / LinTensor / ParamPi: binder (empty when non-dependent).
    // Prop: the proposition name.
    std::string binder;
    std::vector<TypePtr> kids; // {domain/left, codomain/right}, or {element} for Bang/List
    std::vector<TermPtr> args; // See/At/Safe: one argument; Prop: its arguments
};

// Constructors. Locations default to the unknown position.
namespace make {
TermPtr unit(Loc l = {});
TermPtr var(std::string n, Loc l = {});
TermPtr lam(std::string x, TermPtr body, Loc l = {});
TermPtr app(TermPtr f, TermPtr a, Loc l = {});
TermPtr force(TermPtr m, Loc l = {});
TermPtr force_prime(TermPtr r, Loc l = {});
TermPtr lift(TermPtr m, Loc l = {});
TermPtr pair(TermPtr a, TermPtr b, Loc l = {});
TermPtr let_pair(std::string x, std::string y, TermPtr scrut, TermPtr body, Loc l = {});
TermPtr lam_prime(std::string x, TermPtr body, Loc l = {});
TermPtr app_at(TermPtr f, TermPtr a, Loc l = {});
TermPtr inl(TermPtr m, Loc l = {});
TermPtr inr(TermPtr m, Loc l = {});
TermPtr case_of(TermPtr scrut, std::string x, TermPtr left, std::string y, TermPtr right, Loc l = {});
TermPtr hole(std::string n, Loc l = {});
TermPtr nat(std::uint64_t v, Loc l = {});
TermPtr real(double v, Loc l = {});
TermPtr point(double x, double y, Loc l = {});
TermPtr list(std::vector<TermPtr> elems, Loc l = {});
TermPtr annot(TermPtr m, TypePtr a, Loc l = {});

TypePtr see(TermPtr n, Loc l = {});
TypePtr at(TermPtr g, Loc l = {});
TypePtr safe(TermPtr c, Loc l = {});
TypePtr unit_type(Loc l = {});
TypePtr bang(TypePtr a, Loc l = {});
TypePtr lin_pi(std::string x, TypePtr a, TypePtr b, Loc l = {});
TypePtr tensor(std::string x, TypePtr a, TypePtr b, Loc l = {});
TypePtr param_pi(std::string x, TypePtr a, TypePtr b, Loc l = {});
TypePtr sum(TypePtr a, TypePtr b, Loc l = {});
TypePtr base(TypeKind k, Loc l = {}); // Nat, Real, Point, Obstacle
TypePtr list_of(TypePtr a, Loc l = {});
TypePtr prop(std::string name, std::vector<TermPtr> args, Loc l = {});
} // namespace make

enum class DeclKind {
    Value,     // name : Type ;  optionally  name = term ;
    TypeAlias, // type Name(params) = Type ;
    Prop,      // prop Name(params) ;
};

struct Param {
    std::string name;
    TypePtr type;
};

struct Decl {
    DeclKind kind = DeclKind::Value;
    std::string name;
    Loc loc;
    TypePtr type;             // Value: signature; TypeAlias: body
    std::optional<TermPtr> body; // Value only
    Loc body_loc;
    std::vector<Param> params; // TypeAlias / Prop
};

struct Module {
    std::vector<Decl> decls;
};

class SyntaxError : public std::runtime_error {
  public:
    SyntaxError(Loc loc, const std::string& msg)
        : std::runtime_error(msg), loc_(loc) {}
    Loc loc() const { return loc_; }

  private:
    Loc loc_;
};

// Parses a whole `.hdt` module. Type aliases are expanded at their use sites;
// the alias declarations themselves stay in the module so printing keeps them.
Module parse_module(std::string_view source);

// Parses a single type / term. `context` supplies aliases and propositions
// declared elsewhere (e.g. an atom environment); it may be null.
TypePtr parse_type(std::string_view source, const Module* context = nullptr);
TermPtr parse_term(std::string_view source, const Module* context = nullptr);

std::string print(const TypePtr& t);
std::string print(const TermPtr& m);
std::string print(const Decl& d);
std::string print(const Module& m);

// Structural equality ignoring source positions (binder names must match).
bool equal(const TypePtr& a, const TypePtr& b);
bool equal(const TermPtr& a, const TermPtr& b);
bool equal(const Module& a, const Module& b);

// Equality up to renaming of bound variables.
bool alpha_equal(const TypePtr& a, const TypePtr& b);
bool alpha_equal(const TermPtr& a, const TermPtr& b);

std::set<std::string> free_vars(const TermPtr& m);
std::set<std::string> free_vars(const TypePtr& t);

// Capture-avoiding substitution of `replacement` for the free variable `x`.
TermPtr subst(const TermPtr& m, const std::string& x, const TermPtr& replacement);
TypePtr subst(const TypePtr& t, const std::string& x, const TermPtr& replacement);

// A name not in `avoid`, derived from `base` by appending primes.
std::string fresh_name(const std::string& base, const std::set<std::string>& avoid);

// Replace every simple type by Unit; LinPi becomes ParamPi.
TypePtr shape(const TypePtr& t);

enum class TypeClass { Parameter, Linear };
TypeClass classify(const TypePtr& t);
inline bool is_parameter(const TypePtr& t) { return classify(t) == TypeClass::Parameter; }

std::size_t node_count(const TypePtr& t);

bool is_simple(TypeKind k);

} // namespace hydranav::syntax
