#include <cmath>

#include <fmt/format.h>

#include "hydranav/hybrid.hpp"

namespace hydranav::hybrid {

std::string_view to_string(ErrorKind k) {
    switch (k) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::SquareFailure: return "SquareFailure";
    case ErrorKind::FlowFailure: return "FlowFailure";
    case ErrorKind::InterfaceMismatch: return "InterfaceMismatch";
    case ErrorKind::NonEmbeddingLeg: return "NonEmbeddingLeg";
    case ErrorKind::SizeLimitExceeded: return "SizeLimitExceeded";
    case ErrorKind::Injectivity: return "Injectivity";
    case ErrorKind::Invertibility: return "Invertibility";
    case ErrorKind::SinkViolation: return "SinkViolation";
    case ErrorKind::ChainFailure: return "ChainFailure";
    }
    return "Unknown";
}

bool Report::has(ErrorKind k) const {
    for (const auto& f : failures)
        if (f.kind == k) return true;
    return false;
}

bool Box::contains(const Vec& x, double tol) const {
    for (Eigen::Index i = 0; i < lo.size(); ++i)
        if (x(i) < lo(i) - tol || x(i) > hi(i) + tol) return false;
    return true;
}

Vec Box::clamp(const Vec& x) const { return x.cwiseMax(lo).cwiseMin(hi); }

void HybridSystem::validate() const {
    for (std::size_t v = 0; v < modes.size(); ++v) {
        const auto& m = modes[v];
        if (m.domain.lo.size() != m.dim || m.domain.hi.size() != m.dim ||
            static_cast<int>(m.field.size()) != m.dim)
            throw HybridError(ErrorKind::DimensionMismatch,
                              fmt::format("mode {} ('{}') has dimension {} but domain/field sizes {}/{}", v, m.label,
                                          m.dim, m.domain.lo.size(), m.field.size()));
        for (const auto& f : m.field)
            if (expr::max_var(f) >= m.dim)
                throw HybridError(ErrorKind::DimensionMismatch,
                                  fmt::format("mode {} field uses x{} beyond dimension {}", v, expr::max_var(f),
                                              m.dim));
        for (int i = 0; i < m.dim; ++i)
            if (m.domain.lo(i) > m.domain.hi(i))
                throw HybridError(ErrorKind::DimensionMismatch, fmt::format("mode {} has an empty domain", v));
    }
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto& r = edges[e];
        if (r.src < 0 || r.dst < 0 || r.src >= vertex_count() || r.dst >= vertex_count())
            throw HybridError(ErrorKind::DimensionMismatch,
                              fmt::format("edge {} joins missing vertices {} -> {}", e, r.src, r.dst));
        const auto& s = modes[static_cast<std::size_t>(r.src)];
        const auto& d = modes[static_cast<std::size_t>(r.dst)];
        if (r.A.rows() != d.dim || r.A.cols() != s.dim || r.b.size() != d.dim)
            throw HybridError(ErrorKind::DimensionMismatch,
                              fmt::format("edge {} reset is {}x{} but modes have dimensions {} -> {}", e, r.A.rows(),
                                          r.A.cols(), s.dim, d.dim));
    }
}

VertexMap VertexMap::affine(Mat A, Vec b) {
    VertexMap m;
    m.A = std::move(A);
    m.b = std::move(b);
    return m;
}

VertexMap VertexMap::identity(int dim) { return affine(Mat::Identity(dim, dim), Vec::Zero(dim)); }

VertexMap VertexMap::closed_form(std::vector<expr::Expr> exprs, int in_dim) {
    VertexMap m;
    const auto out = static_cast<Eigen::Index>(exprs.size());
    m.A = Mat::Zero(out, in_dim);
    m.b = Vec::Zero(out);
    m.exprs = std::move(exprs);
    return m;
}

int VertexMap::in_dim() const { return static_cast<int>(A.cols()); }
int VertexMap::out_dim() const { return is_affine() ? static_cast<int>(A.rows()) : static_cast<int>(exprs.size()); }

Vec VertexMap::apply(const Vec& x) const { return is_affine() ? Vec(A * x + b) : expr::eval(exprs, x); }

Mat VertexMap::jacobian(const Vec& x) const {
    if (is_affine()) return A;
    Mat J(out_dim(), in_dim());
    for (int i = 0; i < out_dim(); ++i)
        for (int j = 0; j < in_dim(); ++j)
            J(i, j) = expr::eval(expr::derivative(exprs[static_cast<std::size_t>(i)], j), x);
    return J;
}

VertexMap compose(const VertexMap& g, const VertexMap& f) {
    if (g.is_affine() && f.is_affine()) return VertexMap::affine(g.A * f.A, g.A * f.b + g.b);
    VertexMap out;
    out.A = Mat::Zero(g.out_dim(), f.in_dim()); // records the dimensions only
    auto inner = f.is_affine() ? expr::affine_exprs(f.A, f.b) : f.exprs;
    auto outer = g.is_affine() ? expr::affine_exprs(g.A, g.b) : g.exprs;
    for (const auto& e : outer) out.exprs.push_back(expr::substitute(e, inner));
    out.b = Vec::Zero(g.out_dim());
    return out;
}

namespace {

// Radical inverse in the given base.
double radical_inverse(int i, int base) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
        f /= base;
        r += f * (i % base);
        i /= base;
    }
    return r;
}

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71};

bool close(double a, double b) { return std::abs(a - b) <= kTolerance * (1.0 + std::abs(a) + std::abs(b)); }

bool close(const Mat& a, const Mat& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        if (!close(a.data()[i], b.data()[i])) return false;
    return true;
}

} // namespace

std::vector<Vec> halton_samples(const Box& box, int count) {
    std::vector<Vec> out;
    const int d = box.dim();
    for (int i = 1; i <= count; ++i) {
        Vec x(d);
        for (int j = 0; j < d; ++j) {
            double u = radical_inverse(i, kPrimes[j % 20]);
            x(j) = box.lo(j) + u * (box.hi(j) - box.lo(j));
        }
        out.push_back(x);
    }
    return out;
}

Report validate_semiconjugacy(const Semiconjugacy& alpha, const HybridSystem& src, const HybridSystem& dst,
                              int samples) {
    Report rep;
    auto fail = [&](ErrorKind k, int v, int e, Vec w, std::string msg) {
        rep.failures.push_back({k, v, e, std::move(w), std::move(msg)});
    };
    if (static_cast<int>(alpha.vertex_map.size()) != src.vertex_count() ||
        static_cast<int>(alpha.maps.size()) != src.vertex_count() ||
        static_cast<int>(alpha.edge_map.size()) != src.edge_count()) {
        fail(ErrorKind::DimensionMismatch, -1, -1, {},
             fmt::format("map covers {} vertices / {} edges, source has {} / {}", alpha.vertex_map.size(),
                         alpha.edge_map.size(), src.vertex_count(), src.edge_count()));
        return rep;
    }
    for (int v = 0; v < src.vertex_count(); ++v) {
        int w = alpha.vertex_map[static_cast<std::size_t>(v)];
        const auto& m = alpha.maps[static_cast<std::size_t>(v)];
        if (w < 0 || w >= dst.vertex_count()) {
            fail(ErrorKind::DimensionMismatch, v, -1, {}, fmt::format("vertex {} maps to missing vertex {}", v, w));
            continue;
        }
        const auto& sm = src.modes[static_cast<std::size_t>(v)];
        const auto& dm = dst.modes[static_cast<std::size_t>(w)];
        if (m.in_dim() != sm.dim || m.out_dim() != dm.dim)
            fail(ErrorKind::DimensionMismatch, v, -1, {},
                 fmt::format("map at vertex {} is {} -> {}, modes are {} -> {}", v, m.in_dim(), m.out_dim(), sm.dim,
                             dm.dim));
    }
    if (!rep.ok()) return rep;

    for (int e = 0; e < src.edge_count(); ++e) {
        const auto& r = src.edges[static_cast<std::size_t>(e)];
        int f = alpha.edge_map[static_cast<std::size_t>(e)];
        if (f < 0 || f >= dst.edge_count()) {
            fail(ErrorKind::SquareFailure, -1, e, {}, fmt::format("edge {} maps to missing edge {}", e, f));
            continue;
        }
        const auto& q = dst.edges[static_cast<std::size_t>(f)];
        if (q.src != alpha.vertex_map[static_cast<std::size_t>(r.src)] ||
            q.dst != alpha.vertex_map[static_cast<std::size_t>(r.dst)]) {
            fail(ErrorKind::SquareFailure, -1, e, {},
                 fmt::format("edge {} ({} -> {}) maps to edge {} ({} -> {}), inconsistent with the vertex map", e,
                             r.src, r.dst, f, q.src, q.dst));
            continue;
        }
        const auto& a_src = alpha.maps[static_cast<std::size_t>(r.src)];
        const auto& a_dst = alpha.maps[static_cast<std::size_t>(r.dst)];
        if (a_src.is_affine() && a_dst.is_affine()) {
            Mat lhs_A = a_dst.A * r.A, rhs_A = q.A * a_src.A;
            Vec lhs_b = a_dst.A * r.b + a_dst.b, rhs_b = q.A * a_src.b + q.b;
            if (!close(lhs_A, rhs_A) || !close(Mat(lhs_b), Mat(rhs_b)))
                fail(ErrorKind::SquareFailure, -1, e, {},
                     fmt::format("reset square of edge {} does not commute", e));
            continue;
        }
        for (const auto& x : halton_samples(src.modes[static_cast<std::size_t>(r.src)].domain, samples)) {
            Vec lhs = a_dst.apply(r.apply(x)), rhs = q.apply(a_src.apply(x));
            if (!close(Mat(lhs), Mat(rhs))) {
                fail(ErrorKind::SquareFailure, -1, e, x, fmt::format("reset square of edge {} fails at a sample", e));
                break;
            }
        }
    }

    for (int v = 0; v < src.vertex_count(); ++v) {
        const auto& sm = src.modes[static_cast<std::size_t>(v)];
        const auto& dm = dst.modes[static_cast<std::size_t>(alpha.vertex_map[static_cast<std::size_t>(v)])];
        const auto& m = alpha.maps[static_cast<std::size_t>(v)];
        for (const auto& x : halton_samples(sm.domain, samples)) {
            Vec lhs = m.jacobian(x) * sm.flow(x);
            Vec rhs = dm.flow(m.apply(x));
            if (!close(Mat(lhs), Mat(rhs))) {
                fail(ErrorKind::FlowFailure, v, -1, x,
                     fmt::format("flow condition fails at vertex {}: pushed field {} vs target field {}", v,
                                 lhs.size() ? lhs(0) : 0.0, rhs.size() ? rhs(0) : 0.0));
                break;
            }
        }
    }
    return rep;
}

DirectedSystem identity_cospan(const HybridSystem& k) {
    Semiconjugacy id;
    for (int v = 0; v < k.vertex_count(); ++v) {
        id.vertex_map.push_back(v);
        id.maps.push_back(VertexMap::identity(k.modes[static_cast<std::size_t>(v)].dim));
    }
    for (int e = 0; e < k.edge_count(); ++e) id.edge_map.push_back(e);
    return {k, k, k, id, id};
}

} // namespace hydranav::hybrid
