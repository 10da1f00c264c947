#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hydranav/syntax.hpp"

namespace hydranav::check {

using syntax::Loc;
using syntax::TermPtr;
using syntax::TypePtr;

// Usage indices: 0 = erased (types only), 1 = exactly once at runtime, ω = unrestricted.
enum class Index : unsigned char { Zero, One, Omega };

enum class SemiringOp { Add, Mul };

Index index_semiring(SemiringOp op, Index a, Index b);
inline Index add(Index a, Index b) { return index_semiring(SemiringOp::Add, a, b); }
inline Index mul(Index a, Index b) { return index_semiring(SemiringOp::Mul, a, b); }

// Whether a computed usage fits a declared budget.
bool fits(Index used, Index budget);

std::string to_string(Index k);

enum class ErrorCode {
    UnboundVariable,
    NotAFunction,
    ShapeViolation,
    CannotInfer,
    LinearityViolation,
    BranchUsageMismatch,
    LiftOfLinear,
    ParameterContextViolation,
    TypeMismatch,
    IllFormedType,
    HoleNotAllowed,
    DuplicateDeclaration,
    DomainMismatch,
    SyntaxError,
};

std::string_view to_string(ErrorCode c);

class CheckError : public std::runtime_error {
  public:
    CheckError(ErrorCode code, Loc loc, const std::string& msg)
        : std::runtime_error(msg), code_(code), loc_(loc) {}
    ErrorCode code() const { return code_; }
    Loc loc() const { return loc_; }

  private:
    ErrorCode code_;
    Loc loc_;
};

struct Entry {
    std::string name;
    TypePtr type;
    Index budget = Index::One;
};

class Context {
  public:
    Context() = default;
    Context(std::initializer_list<Entry> entries);

    // Later entries shadow earlier ones with the same name.
    Context extended(std::string name, TypePtr type, Index budget) const;
    std::optional<std::size_t> lookup(std::string_view name) const;

    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    const Entry& operator[](std::size_t i) const { return entries_[i]; }

  private:
    std::vector<Entry> entries_;
};

// Usage vector aligned with a context: one index per entry, in order.
class UsageVector {
  public:
    UsageVector() = default;
    explicit UsageVector(const Context& ctx);
    UsageVector(std::vector<std::string> names, std::vector<Index> usage);

    const std::vector<std::string>& names() const { return names_; }
    const std::vector<Index>& indices() const { return usage_; }
    std::size_t size() const { return usage_.size(); }
    Index operator[](std::size_t i) const { return usage_[i]; }
    Index& operator[](std::size_t i) { return usage_[i]; }
    Index of(std::string_view name) const;

    // Drop the innermost `n` entries.
    UsageVector popped(std::size_t n = 1) const;
    UsageVector scaled(Index k) const;
    bool operator==(const UsageVector&) const = default;

  private:
    std::vector<std::string> names_;
    std::vector<Index> usage_;
};

// Pointwise addition; throws CheckError(DomainMismatch) when domains differ.
UsageVector ctx_add(const UsageVector& a, const UsageVector& b);

std::string to_string(const UsageVector& u);

// Throws ParameterContextViolation when an index-1 entry has a non-parameter type.
void validate_parameter_context(const Context& ctx);

struct Inferred {
    TypePtr type;
    UsageVector usage;
};

struct Options {
    bool allow_holes = false;
};

// Global declarations visible to every term: value signatures and proposition
// parameter lists. Globals are constants and are not tracked by usage vectors.
class Signature {
  public:
    void add_value(const std::string& name, TypePtr type);
    void add_prop(const std::string& name, std::vector<syntax::Param> params);
    const TypePtr* value(std::string_view name) const;
    const std::vector<syntax::Param>* prop(std::string_view name) const;

  private:
    std::map<std::string, TypePtr, std::less<>> values_;
    std::map<std::string, std::vector<syntax::Param>, std::less<>> props_;
};

class Checker {
  public:
    explicit Checker(const Signature& sig, Options opts = {}) : sig_(sig), opts_(opts) {}

    Inferred infer_term(const Context& ctx, const TermPtr& m) const;
    UsageVector check_term(const Context& ctx, const TermPtr& m, const TypePtr& a) const;

    // Kind-checks a type: names resolve, simple-type arguments have the right sorts,
    // function domains behind `->` are parameter types.
    void check_type(const Context& ctx, const TypePtr& a) const;

    // Definitional equality: alpha-equivalence after reducing parameter-level redexes.
    bool defeq(const TypePtr& a, const TypePtr& b) const;

  private:
    const Signature& sig_;
    Options opts_;

    UsageVector bind_and_check(const Context& ctx, const std::vector<std::pair<std::string, TypePtr>>& binders,
                               const TermPtr& body, const TypePtr& expected, Loc loc,
                               std::vector<std::string>* renamed = nullptr) const;
    void close_binders(const Context& inner, const UsageVector& u, std::size_t n, Loc loc) const;
    void require_parameter_term(const Context& ctx, const UsageVector& u, Loc loc, std::string_view what) const;
    TypePtr substitute_shape(const Context& ctx, const TypePtr& body, const std::string& binder, const TermPtr& arg,
                             const UsageVector& arg_usage, Loc loc) const;
    std::pair<TypePtr, UsageVector> lookup_var(const Context& ctx, const TermPtr& m) const;
};

TermPtr normalize(const TermPtr& m);
TypePtr normalize(const TypePtr& t);

Index binder_index(const TypePtr& t);

struct Diagnostic {
    ErrorCode code;
    Loc loc;
    std::string message;
};

struct DeclResult {
    std::string name;
    Loc loc;
    bool ok = true;
    std::vector<Diagnostic> diagnostics;
};

struct Report {
    std::vector<DeclResult> decls;
    bool ok() const;
};

Report check_decl_file(const syntax::Module& module, Options opts = {});

// `file:line:col: error[CODE]: message`
std::string format_diagnostic(std::string_view file, const Diagnostic& d, bool color = false);

} // namespace hydranav::check
