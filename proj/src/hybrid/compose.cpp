#include <map>
#include <set>

#include <fmt/format.h>

#include "hydranav/hybrid.hpp"

namespace hydranav::hybrid {

namespace {

bool injective(const std::vector<int>& m) { return std::set<int>(m.begin(), m.end()).size() == m.size(); }

bool full_column_rank(const VertexMap& m, const Box& domain) {
    if (m.is_affine()) return Eigen::FullPivLU<Mat>(m.A).rank() == m.A.cols();
    for (const auto& x : halton_samples(domain, 8))
        if (Eigen::FullPivLU<Mat>(m.jacobian(x)).rank() != m.in_dim()) return false;
    return true;
}

void require_embedding(const Semiconjugacy& leg, const HybridSystem& foot, std::string_view which) {
    if (!injective(leg.vertex_map) || !injective(leg.edge_map))
        throw HybridError(ErrorKind::NonEmbeddingLeg, fmt::format("{} leg is not injective on the graph", which));
    for (std::size_t v = 0; v < leg.maps.size(); ++v)
        if (!full_column_rank(leg.maps[v], foot.modes[v].domain))
            throw HybridError(ErrorKind::NonEmbeddingLeg,
                              fmt::format("{} leg map at interface vertex {} is not injective", which, v));
}

bool same_box(const Box& a, const Box& b) {
    return a.dim() == b.dim() && (a.lo - b.lo).norm() <= kTolerance * (1 + a.lo.norm()) &&
           (a.hi - b.hi).norm() <= kTolerance * (1 + a.hi.norm());
}

// Vertex correspondence between two interface systems: by labels when every
// label is present and unique on both sides, else by position.
std::vector<int> match_interface(const HybridSystem& k1, const HybridSystem& k2) {
    if (k1.vertex_count() != k2.vertex_count() || k1.edge_count() != k2.edge_count())
        throw HybridError(ErrorKind::InterfaceMismatch,
                          fmt::format("interfaces differ in size: {} vertices/{} edges vs {}/{}", k1.vertex_count(),
                                      k1.edge_count(), k2.vertex_count(), k2.edge_count()));
    const int n = k1.vertex_count();
    std::vector<int> match(static_cast<std::size_t>(n));
    std::map<std::string, int> by_label;
    bool labelled = true;
    for (int v = 0; v < n; ++v) {
        const auto& l = k2.modes[static_cast<std::size_t>(v)].label;
        if (l.empty() || !by_label.emplace(l, v).second) labelled = false;
    }
    for (int v = 0; v < n; ++v) {
        const auto& l = k1.modes[static_cast<std::size_t>(v)].label;
        if (labelled) {
            auto it = by_label.find(l);
            if (it == by_label.end())
                throw HybridError(ErrorKind::InterfaceMismatch,
                                  fmt::format("interface vertex '{}' has no counterpart", l));
            match[static_cast<std::size_t>(v)] = it->second;
        } else {
            match[static_cast<std::size_t>(v)] = v;
        }
    }
    if (!injective(match)) throw HybridError(ErrorKind::InterfaceMismatch, "interface labels are not a bijection");
    for (int v = 0; v < n; ++v) {
        const auto& a = k1.modes[static_cast<std::size_t>(v)];
        const auto& b = k2.modes[static_cast<std::size_t>(match[static_cast<std::size_t>(v)])];
        if (a.dim != b.dim)
            throw HybridError(ErrorKind::InterfaceMismatch,
                              fmt::format("interface vertex {} has dimension {} on one side and {} on the other", v,
                                          a.dim, b.dim));
        if (!same_box(a.domain, b.domain))
            throw HybridError(ErrorKind::InterfaceMismatch,
                              fmt::format("interface vertex {} has different domains on the two sides", v));
        for (const auto& x : halton_samples(a.domain, 16))
            if ((a.flow(x) - b.flow(x)).norm() > kTolerance * (1 + a.flow(x).norm()))
                throw HybridError(ErrorKind::InterfaceMismatch,
                                  fmt::format("interface vertex {} has different dynamics on the two sides", v));
    }
    return match;
}

// Matches interface edges with corresponding endpoints, in order of appearance.
std::vector<int> match_edges(const HybridSystem& k1, const HybridSystem& k2, const std::vector<int>& vmatch) {
    std::vector<int> out;
    std::vector<char> used(static_cast<std::size_t>(k2.edge_count()), 0);
    for (const auto& e : k1.edges) {
        int found = -1;
        for (int f = 0; f < k2.edge_count() && found < 0; ++f) {
            const auto& g = k2.edges[static_cast<std::size_t>(f)];
            if (!used[static_cast<std::size_t>(f)] && g.src == vmatch[static_cast<std::size_t>(e.src)] &&
                g.dst == vmatch[static_cast<std::size_t>(e.dst)] && (g.A - e.A).norm() <= kTolerance * (1 + e.A.norm()) &&
                (g.b - e.b).norm() <= kTolerance * (1 + e.b.norm()))
                found = f;
        }
        if (found < 0)
            throw HybridError(ErrorKind::InterfaceMismatch,
                              fmt::format("interface edge {} -> {} has no matching edge", e.src, e.dst));
        used[static_cast<std::size_t>(found)] = 1;
        out.push_back(found);
    }
    return out;
}

VertexMap inverse(const VertexMap& m) {
    Eigen::FullPivLU<Mat> lu(m.A);
    Mat inv = lu.inverse();
    return VertexMap::affine(inv, -inv * m.b);
}

bool invertible(const VertexMap& m) {
    return m.is_affine() && m.A.rows() == m.A.cols() && Eigen::FullPivLU<Mat>(m.A).isInvertible();
}

Reset transform_reset(const Reset& r, const VertexMap* pre_inv, const VertexMap* post) {
    Reset out = r;
    if (pre_inv) {
        out.b = out.A * pre_inv->b + out.b;
        out.A = out.A * pre_inv->A;
    }
    if (post) {
        out.b = post->A * out.b + post->b;
        out.A = post->A * out.A;
    }
    return out;
}

VertexMap block_diag(const VertexMap& f, const VertexMap& g) {
    if (f.is_affine() && g.is_affine()) {
        Mat A = Mat::Zero(f.A.rows() + g.A.rows(), f.A.cols() + g.A.cols());
        A.topLeftCorner(f.A.rows(), f.A.cols()) = f.A;
        A.bottomRightCorner(g.A.rows(), g.A.cols()) = g.A;
        Vec b(f.b.size() + g.b.size());
        b << f.b, g.b;
        return VertexMap::affine(A, b);
    }
    VertexMap out;
    out.A = Mat::Zero(f.out_dim() + g.out_dim(), f.in_dim() + g.in_dim());
    out.b = Vec::Zero(f.out_dim() + g.out_dim());
    for (const auto& e : f.is_affine() ? expr::affine_exprs(f.A, f.b) : f.exprs) out.exprs.push_back(e);
    for (const auto& e : g.is_affine() ? expr::affine_exprs(g.A, g.b) : g.exprs)
        out.exprs.push_back(expr::shift_vars(e, f.in_dim()));
    return out;
}

Semiconjugacy product_leg(const Semiconjugacy& a, const HybridSystem& a_src, const HybridSystem& a_dst,
                          const Semiconjugacy& b, const HybridSystem& b_src, const HybridSystem& b_dst) {
    Semiconjugacy out;
    const int nb_src = b_src.vertex_count(), nb_dst = b_dst.vertex_count();
    const int eb_dst = b_dst.edge_count(), ea_dst = a_dst.edge_count();
    for (int u = 0; u < a_src.vertex_count(); ++u)
        for (int v = 0; v < nb_src; ++v) {
            out.vertex_map.push_back(a.vertex_map[static_cast<std::size_t>(u)] * nb_dst +
                                     b.vertex_map[static_cast<std::size_t>(v)]);
            out.maps.push_back(block_diag(a.maps[static_cast<std::size_t>(u)], b.maps[static_cast<std::size_t>(v)]));
        }
    for (int e = 0; e < a_src.edge_count(); ++e)
        for (int v = 0; v < nb_src; ++v)
            out.edge_map.push_back(a.edge_map[static_cast<std::size_t>(e)] * nb_dst +
                                   b.vertex_map[static_cast<std::size_t>(v)]);
    for (int u = 0; u < a_src.vertex_count(); ++u)
        for (int f = 0; f < b_src.edge_count(); ++f)
            out.edge_map.push_back(ea_dst * nb_dst + a.vertex_map[static_cast<std::size_t>(u)] * eb_dst +
                                   b.edge_map[static_cast<std::size_t>(f)]);
    return out;
}

} // namespace

DirectedSystem compose_sequential(const DirectedSystem& h1, const DirectedSystem& h2) {
    const auto& alpha = h1.final_leg; // K -> H1
    const auto& beta = h2.initial_leg; // K -> H2
    auto vmatch = match_interface(h1.final_, h2.initial);
    auto ematch = match_edges(h1.final_, h2.initial, vmatch);
    require_embedding(alpha, h1.final_, "final");
    require_embedding(beta, h2.initial, "initial");

    const auto& H1 = h1.apex;
    const auto& H2 = h2.apex;
    const int n1 = H1.vertex_count();

    // H2 vertex -> pushout vertex; glued H1 vertex -> transport H1 coords to H2 coords.
    std::vector<int> vmap2(static_cast<std::size_t>(H2.vertex_count()), -1);
    std::map<int, VertexMap> phi;
    std::map<int, int> glued_from; // pushout id -> H2 vertex
    for (int k = 0; k < h1.final_.vertex_count(); ++k) {
        int v1 = alpha.vertex_map[static_cast<std::size_t>(k)];
        int k2 = vmatch[static_cast<std::size_t>(k)];
        int w = beta.vertex_map[static_cast<std::size_t>(k2)];
        const auto& a = alpha.maps[static_cast<std::size_t>(k)];
        if (!invertible(a))
            throw HybridError(ErrorKind::NonEmbeddingLeg,
                              fmt::format("final leg map at interface vertex {} is not an invertible affine map", k));
        vmap2[static_cast<std::size_t>(w)] = v1;
        phi.emplace(v1, compose(beta.maps[static_cast<std::size_t>(k2)], inverse(a)));
        glued_from[v1] = w;
    }
    int next = n1;
    for (auto& v : vmap2)
        if (v < 0) v = next++;

    DirectedSystem out;
    auto& P = out.apex;
    P.modes = H1.modes;
    for (const auto& [v1, w] : glued_from) P.modes[static_cast<std::size_t>(v1)] = H2.modes[static_cast<std::size_t>(w)];
    for (int w = 0; w < H2.vertex_count(); ++w)
        if (vmap2[static_cast<std::size_t>(w)] >= n1) P.modes.push_back(H2.modes[static_cast<std::size_t>(w)]);

    // Interface edges: H1 edge id -> H2 edge carrying its data.
    std::map<int, int> k_edge;
    std::set<int> h2_k_edges;
    for (int e = 0; e < h1.final_.edge_count(); ++e) {
        int f = beta.edge_map[static_cast<std::size_t>(ematch[static_cast<std::size_t>(e)])];
        k_edge[alpha.edge_map[static_cast<std::size_t>(e)]] = f;
        h2_k_edges.insert(f);
    }

    auto remap2 = [&](Reset r) {
        r.src = vmap2[static_cast<std::size_t>(r.src)];
        r.dst = vmap2[static_cast<std::size_t>(r.dst)];
        return r;
    };
    for (int e = 0; e < H1.edge_count(); ++e) {
        if (auto it = k_edge.find(e); it != k_edge.end()) {
            P.edges.push_back(remap2(H2.edges[static_cast<std::size_t>(it->second)]));
            continue;
        }
        const auto& r = H1.edges[static_cast<std::size_t>(e)];
        const VertexMap* post = nullptr;
        std::optional<VertexMap> pre_inv;
        if (auto it = phi.find(r.dst); it != phi.end()) post = &it->second;
        if (auto it = phi.find(r.src); it != phi.end()) {
            if (!invertible(it->second))
                throw HybridError(ErrorKind::NonEmbeddingLeg,
                                  fmt::format("edge {} leaves glued vertex {} whose coordinates cannot be transported",
                                              e, r.src));
            pre_inv = inverse(it->second);
        }
        P.edges.push_back(transform_reset(r, pre_inv ? &*pre_inv : nullptr, post));
    }
    std::vector<int> emap2(static_cast<std::size_t>(H2.edge_count()), -1);
    for (const auto& [e1, f] : k_edge) emap2[static_cast<std::size_t>(f)] = e1;
    for (int f = 0; f < H2.edge_count(); ++f) {
        if (h2_k_edges.count(f)) continue;
        emap2[static_cast<std::size_t>(f)] = P.edge_count();
        P.edges.push_back(remap2(H2.edges[static_cast<std::size_t>(f)]));
    }

    out.initial = h1.initial;
    out.initial_leg = h1.initial_leg;
    for (std::size_t k = 0; k < out.initial_leg.maps.size(); ++k)
        if (auto it = phi.find(out.initial_leg.vertex_map[k]); it != phi.end())
            out.initial_leg.maps[k] = compose(it->second, out.initial_leg.maps[k]);

    out.final_ = h2.final_;
    out.final_leg = h2.final_leg;
    for (auto& v : out.final_leg.vertex_map) v = vmap2[static_cast<std::size_t>(v)];
    for (auto& e : out.final_leg.edge_map) e = emap2[static_cast<std::size_t>(e)];

    const int expect_v = H1.vertex_count() + H2.vertex_count() - h1.final_.vertex_count();
    const int expect_e = H1.edge_count() + H2.edge_count() - h1.final_.edge_count();
    if (P.vertex_count() != expect_v || P.edge_count() != expect_e)
        throw std::logic_error(fmt::format("pushout has {} vertices / {} edges, expected {} / {}", P.vertex_count(),
                                           P.edge_count(), expect_v, expect_e));
    return out;
}

HybridSystem product(const HybridSystem& a, const HybridSystem& b) {
    HybridSystem p;
    for (const auto& ma : a.modes)
        for (const auto& mb : b.modes) {
            Mode m;
            m.label = ma.label.empty() && mb.label.empty() ? "" : ma.label + "|" + mb.label;
            m.dim = ma.dim + mb.dim;
            m.domain.lo.resize(m.dim);
            m.domain.hi.resize(m.dim);
            m.domain.lo << ma.domain.lo, mb.domain.lo;
            m.domain.hi << ma.domain.hi, mb.domain.hi;
            m.field = ma.field;
            for (const auto& f : mb.field) m.field.push_back(expr::shift_vars(f, ma.dim));
            p.modes.push_back(std::move(m));
        }
    const int nb = b.vertex_count();
    for (const auto& e : a.edges)
        for (int v = 0; v < nb; ++v) {
            const int d = b.modes[static_cast<std::size_t>(v)].dim;
            auto m = block_diag(VertexMap::affine(e.A, e.b), VertexMap::identity(d));
            p.edges.push_back({e.label, e.src * nb + v, e.dst * nb + v, m.A, m.b});
        }
    for (int u = 0; u < a.vertex_count(); ++u)
        for (const auto& f : b.edges) {
            const int d = a.modes[static_cast<std::size_t>(u)].dim;
            auto m = block_diag(VertexMap::identity(d), VertexMap::affine(f.A, f.b));
            p.edges.push_back({f.label, u * nb + f.src, u * nb + f.dst, m.A, m.b});
        }
    return p;
}

DirectedSystem compose_parallel(const DirectedSystem& h1, const DirectedSystem& h2) {
    DirectedSystem out;
    out.apex = product(h1.apex, h2.apex);
    out.initial = product(h1.initial, h2.initial);
    out.final_ = product(h1.final_, h2.final_);
    out.initial_leg = product_leg(h1.initial_leg, h1.initial, h1.apex, h2.initial_leg, h2.initial, h2.apex);
    out.final_leg = product_leg(h1.final_leg, h1.final_, h1.apex, h2.final_leg, h2.final_, h2.apex);
    return out;
}

} // namespace hydranav::hybrid
