#include <fmt/format.h>

#include "hydranav/typechecker.hpp"

namespace hydranav::check {

Index index_semiring(SemiringOp op, Index a, Index b) {
    if (op == SemiringOp::Add) {
        if (a == Index::Zero) return b;
        if (b == Index::Zero) return a;
        return Index::Omega; // 1+1, 1+ω, ω+k
    }
    if (a == Index::Zero || b == Index::Zero) return Index::Zero;
    if (a == Index::One) return b;
    if (b == Index::One) return a;
    return Index::Omega;
}

bool fits(Index used, Index budget) {
    switch (used) {
    case Index::Zero: return true;
    case Index::One: return budget != Index::Zero;
    case Index::Omega: return budget == Index::Omega;
    }
    return false;
}

std::string to_string(Index k) {
    switch (k) {
    case Index::Zero: return "0";
    case Index::One: return "1";
    case Index::Omega: return "ω";
    }
    return "?";
}

std::string_view to_string(ErrorCode c) {
    switch (c) {
    case ErrorCode::UnboundVariable: return "UnboundVariable";
    case ErrorCode::NotAFunction: return "NotAFunction";
    case ErrorCode::ShapeViolation: return "ShapeViolation";
    case ErrorCode::CannotInfer: return "CannotInfer";
    case ErrorCode::LinearityViolation: return "LinearityViolation";
    case ErrorCode::BranchUsageMismatch: return "BranchUsageMismatch";
    case ErrorCode::LiftOfLinear: return "LiftOfLinear";
    case ErrorCode::ParameterContextViolation: return "ParameterContextViolation";
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::IllFormedType: return "IllFormedType";
    case ErrorCode::HoleNotAllowed: return "HoleNotAllowed";
    case ErrorCode::DuplicateDeclaration: return "DuplicateDeclaration";
    case ErrorCode::DomainMismatch: return "DomainMismatch";
    case ErrorCode::SyntaxError: return "SyntaxError";
    }
    return "Unknown";
}

Context::Context(std::initializer_list<Entry> entries) : entries_(entries) {}

Context Context::extended(std::string name, TypePtr type, Index budget) const {
    Context c = *this;
    c.entries_.push_back({std::move(name), std::move(type), budget});
    return c;
}

std::optional<std::size_t> Context::lookup(std::string_view name) const {
    for (std::size_t i = entries_.size(); i-- > 0;)
        if (entries_[i].name == name) return i;
    return std::nullopt;
}

UsageVector::UsageVector(const Context& ctx) : usage_(ctx.size(), Index::Zero) {
    names_.reserve(ctx.size());
    for (const auto& e : ctx.entries()) names_.push_back(e.name);
}

UsageVector::UsageVector(std::vector<std::string> names, std::vector<Index> usage)
    : names_(std::move(names)), usage_(std::move(usage)) {
    if (names_.size() != usage_.size())
        throw CheckError(ErrorCode::DomainMismatch, {}, "usage vector names and indices differ in length");
}

Index UsageVector::of(std::string_view name) const {
    for (std::size_t i = names_.size(); i-- > 0;)
        if (names_[i] == name) return usage_[i];
    return Index::Zero;
}

UsageVector UsageVector::popped(std::size_t n) const {
    UsageVector u = *this;
    n = std::min(n, u.usage_.size());
    u.names_.resize(u.names_.size() - n);
    u.usage_.resize(u.usage_.size() - n);
    return u;
}

UsageVector UsageVector::scaled(Index k) const {
    UsageVector u = *this;
    for (auto& i : u.usage_) i = mul(k, i);
    return u;
}

UsageVector ctx_add(const UsageVector& a, const UsageVector& b) {
    if (a.names() != b.names())
        throw CheckError(ErrorCode::DomainMismatch, {},
                         fmt::format("cannot add usage vectors over different contexts: {} vs {}", to_string(a),
                                     to_string(b)));
    UsageVector out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = add(a[i], b[i]);
    return out;
}

std::string to_string(const UsageVector& u) {
    std::string s = "{";
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (i) s += ", ";
        s += u.names()[i] + ":" + to_string(u[i]);
    }
    return s + "}";
}

void validate_parameter_context(const Context& ctx) {
    for (const auto& e : ctx.entries()) {
        if (e.budget == Index::One && !syntax::is_parameter(e.type))
            throw CheckError(ErrorCode::ParameterContextViolation, e.type ? e.type->loc : Loc{},
                             fmt::format("'{}' : {} has index 1 in a parameter context, but {} is not a parameter type",
                                         e.name, syntax::print(e.type), syntax::print(e.type)));
    }
}

} // namespace hydranav::check
