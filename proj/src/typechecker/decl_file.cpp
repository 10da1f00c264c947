#include <set>

#include <fmt/format.h>

#include "hydranav/typechecker.hpp"

namespace hydranav::check {

bool Report::ok() const {
    for (const auto& d : decls)
        if (!d.ok) return false;
    return true;
}

namespace {

void check_params(const Checker& checker, const std::vector<syntax::Param>& params, Context& ctx) {
    for (const auto& p : params) {
        checker.check_type(ctx, p.type);
        if (!syntax::is_parameter(p.type))
            throw CheckError(ErrorCode::IllFormedType, p.type->loc,
                             fmt::format("parameter '{}' must have a parameter type, got {}", p.name,
                                         syntax::print(p.type)));
        ctx = ctx.extended(p.name, p.type, Index::Omega);
    }
}

} // namespace

Report check_decl_file(const syntax::Module& module, Options opts) {
    Report report;
    report.decls.resize(module.decls.size());

    Signature sig;
    std::set<std::string> seen_values, seen_props;
    std::vector<std::optional<Diagnostic>> early(module.decls.size());
    for (std::size_t i = 0; i < module.decls.size(); ++i) {
        const auto& d = module.decls[i];
        if (d.kind == syntax::DeclKind::Value) {
            if (!seen_values.insert(d.name).second)
                early[i] = Diagnostic{ErrorCode::DuplicateDeclaration, d.loc,
                                      fmt::format("'{}' is declared more than once", d.name)};
            else
                sig.add_value(d.name, d.type);
        } else if (d.kind == syntax::DeclKind::Prop) {
            seen_props.insert(d.name);
            sig.add_prop(d.name, d.params);
        }
    }

    Checker checker(sig, opts);
    const auto n = static_cast<long>(module.decls.size());
    // Declarations are independent once the signature is fixed.
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) {
        const auto& d = module.decls[static_cast<std::size_t>(i)];
        auto& r = report.decls[static_cast<std::size_t>(i)];
        r.name = d.name;
        r.loc = d.loc;
        if (early[static_cast<std::size_t>(i)]) {
            r.ok = false;
            r.diagnostics.push_back(*early[static_cast<std::size_t>(i)]);
            continue;
        }
        try {
            Context ctx;
            switch (d.kind) {
            case syntax::DeclKind::Prop: check_params(checker, d.params, ctx); break;
            case syntax::DeclKind::TypeAlias:
                check_params(checker, d.params, ctx);
                checker.check_type(ctx, d.type);
                break;
            case syntax::DeclKind::Value:
                checker.check_type(ctx, d.type);
                if (d.body) checker.check_term(ctx, *d.body, d.type);
                break;
            }
        } catch (const CheckError& e) {
            r.ok = false;
            r.diagnostics.push_back({e.code(), e.loc(), e.what()});
        }
    }
    return report;
}

std::string format_diagnostic(std::string_view file, const Diagnostic& d, bool color) {
    std::string_view err = color ? "\x1b[1;31merror\x1b[0m" : "error";
    return fmt::format("{}:{}:{}: {}[{}]: {}", file, d.loc.line, d.loc.col, err, to_string(d.code), d.message);
}

} // namespace hydranav::check
