#include <algorithm>
#include <functional>
#include <numeric>

#include <fmt/format.h>

#include "hydranav/hybrid.hpp"

namespace hydranav::hybrid {

namespace {

bool near(const Vec& a, const Vec& b) { return (a - b).norm() <= 1e-8 * (1 + a.norm() + b.norm()); }
bool near(const Mat& a, const Mat& b) { return (a - b).norm() <= 1e-8 * (1 + a.norm() + b.norm()); }

bool invertible_affine(const VertexMap& m) {
    return m.is_affine() && m.A.rows() == m.A.cols() && Eigen::FullPivLU<Mat>(m.A).isInvertible();
}

VertexMap inverse(const VertexMap& m) {
    Mat inv = Eigen::FullPivLU<Mat>(m.A).inverse();
    return VertexMap::affine(inv, -inv * m.b);
}

// psi conjugates mode a onto mode b: invertible, maps domain onto domain, pushes the field.
bool conjugates(const VertexMap& psi, const Mode& a, const Mode& b) {
    if (!invertible_affine(psi) || psi.A.rows() != b.dim) return false;
    Vec lo = Vec::Constant(b.dim, INFINITY), hi = Vec::Constant(b.dim, -INFINITY);
    for (int mask = 0; mask < (1 << std::min(a.dim, 12)); ++mask) {
        Vec x(a.dim);
        for (int i = 0; i < a.dim; ++i) x(i) = (mask >> i & 1) ? a.domain.hi(i) : a.domain.lo(i);
        Vec y = psi.apply(x);
        lo = lo.cwiseMin(y);
        hi = hi.cwiseMax(y);
    }
    if (!near(lo, b.domain.lo) || !near(hi, b.domain.hi)) return false;
    for (const auto& x : halton_samples(a.domain, 16))
        if (!near(Vec(psi.A * a.flow(x)), b.flow(psi.apply(x)))) return false;
    return true;
}

std::vector<Mat> permutations(int d) {
    std::vector<Mat> out;
    if (d > 4) {
        out.push_back(Mat::Identity(d, d));
        return out;
    }
    std::vector<int> p(static_cast<std::size_t>(d));
    std::iota(p.begin(), p.end(), 0);
    do {
        Mat P = Mat::Zero(d, d);
        for (int i = 0; i < d; ++i) P(p[static_cast<std::size_t>(i)], i) = 1;
        out.push_back(P);
    } while (std::next_permutation(p.begin(), p.end()));
    return out;
}

struct Search {
    const DirectedSystem& a;
    const DirectedSystem& b;
    int n = 0;
    std::vector<std::vector<std::vector<VertexMap>>> cand; // [u][v] -> candidate maps
    std::vector<std::vector<int>> count_a, count_b;        // edge multiplicities
    std::vector<int> pi;
    std::vector<char> used;
    std::vector<const VertexMap*> psi;

    Search(const DirectedSystem& x, const DirectedSystem& y) : a(x), b(y), n(x.apex.vertex_count()) {
        auto counts = [&](const HybridSystem& h) {
            std::vector<std::vector<int>> c(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(n), 0));
            for (const auto& e : h.edges) ++c[static_cast<std::size_t>(e.src)][static_cast<std::size_t>(e.dst)];
            return c;
        };
        count_a = counts(a.apex);
        count_b = counts(b.apex);
        cand.assign(static_cast<std::size_t>(n), std::vector<std::vector<VertexMap>>(static_cast<std::size_t>(n)));
        for (int u = 0; u < n; ++u)
            for (int v = 0; v < n; ++v) build_candidates(u, v);
        pi.assign(static_cast<std::size_t>(n), -1);
        used.assign(static_cast<std::size_t>(n), 0);
        psi.assign(static_cast<std::size_t>(n), nullptr);
    }

    void add_leg_candidates(int u, int v, const Semiconjugacy& la, const Semiconjugacy& lb, std::vector<VertexMap>& out) {
        for (std::size_t k = 0; k < la.vertex_map.size(); ++k) {
            if (la.vertex_map[k] != u || !invertible_affine(la.maps[k])) continue;
            auto inv = inverse(la.maps[k]);
            for (std::size_t j = 0; j < lb.vertex_map.size(); ++j)
                if (lb.vertex_map[j] == v && lb.maps[j].is_affine() && lb.maps[j].in_dim() == la.maps[k].in_dim())
                    out.push_back(compose(lb.maps[j], inv));
        }
    }

    void build_candidates(int u, int v) {
        const auto& ma = a.apex.modes[static_cast<std::size_t>(u)];
        const auto& mb = b.apex.modes[static_cast<std::size_t>(v)];
        if (ma.dim != mb.dim) return;
        std::vector<VertexMap> raw;
        for (const auto& P : permutations(ma.dim)) raw.push_back(VertexMap::affine(P, Vec::Zero(ma.dim)));
        add_leg_candidates(u, v, a.initial_leg, b.initial_leg, raw);
        add_leg_candidates(u, v, a.final_leg, b.final_leg, raw);
        auto& out = cand[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)];
        for (const auto& m : raw) {
            if (!m.is_affine() || m.A.rows() != ma.dim || m.A.cols() != ma.dim) continue;
            bool dup = std::any_of(out.begin(), out.end(), [&](const VertexMap& o) { return near(o.A, m.A) && near(o.b, m.b); });
            if (!dup && conjugates(m, ma, mb)) out.push_back(m);
        }
    }

    bool adjacency_ok(int u) const {
        for (int w = 0; w < n; ++w) {
            if (pi[static_cast<std::size_t>(w)] < 0) continue;
            int pu = pi[static_cast<std::size_t>(u)], pw = pi[static_cast<std::size_t>(w)];
            if (count_a[static_cast<std::size_t>(u)][static_cast<std::size_t>(w)] !=
                    count_b[static_cast<std::size_t>(pu)][static_cast<std::size_t>(pw)] ||
                count_a[static_cast<std::size_t>(w)][static_cast<std::size_t>(u)] !=
                    count_b[static_cast<std::size_t>(pw)][static_cast<std::size_t>(pu)])
                return false;
        }
        return true;
    }

    // Edges between assigned vertices admit a bijection with commuting reset squares.
    bool resets_ok(int u) const {
        for (int w = 0; w < n; ++w) {
            if (!psi[static_cast<std::size_t>(w)]) continue;
            for (auto [s, t] : {std::pair{u, w}, std::pair{w, u}}) {
                std::vector<const Reset*> ea, eb;
                for (const auto& e : a.apex.edges)
                    if (e.src == s && e.dst == t) ea.push_back(&e);
                for (const auto& e : b.apex.edges)
                    if (e.src == pi[static_cast<std::size_t>(s)] && e.dst == pi[static_cast<std::size_t>(t)]) eb.push_back(&e);
                if (!match_resets(ea, eb, *psi[static_cast<std::size_t>(s)], *psi[static_cast<std::size_t>(t)])) return false;
                if (s == t) break;
            }
        }
        return true;
    }

    static bool match_resets(const std::vector<const Reset*>& ea, const std::vector<const Reset*>& eb,
                             const VertexMap& ps, const VertexMap& pt) {
        const std::size_t m = ea.size();
        std::vector<std::vector<char>> ok(m, std::vector<char>(m, 0));
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                ok[i][j] = near(Mat(pt.A * ea[i]->A), Mat(eb[j]->A * ps.A)) &&
                           near(Vec(pt.A * ea[i]->b + pt.b), Vec(eb[j]->A * ps.b + eb[j]->b));
        std::vector<int> owner(m, -1);
        std::function<bool(std::size_t, std::vector<char>&)> augment = [&](std::size_t i, std::vector<char>& seen) {
            for (std::size_t j = 0; j < m; ++j) {
                if (!ok[i][j] || seen[j]) continue;
                seen[j] = 1;
                if (owner[j] < 0 || augment(static_cast<std::size_t>(owner[j]), seen)) {
                    owner[j] = static_cast<int>(i);
                    return true;
                }
            }
            return false;
        };
        for (std::size_t i = 0; i < m; ++i) {
            std::vector<char> seen(m, 0);
            if (!augment(i, seen)) return false;
        }
        return true;
    }

    // Each foot vertex of `la` must land, through pi and psi, on the image of a foot
    // vertex of `lb` via an invertible affine change of foot coordinates.
    bool legs_ok(const Semiconjugacy& la, const HybridSystem& fa, const Semiconjugacy& lb, const HybridSystem& fb) const {
        if (fa.vertex_count() != fb.vertex_count() || fa.edge_count() != fb.edge_count()) return false;
        std::vector<char> hit(lb.vertex_map.size(), 0);
        for (std::size_t k = 0; k < la.vertex_map.size(); ++k) {
            int target = pi[static_cast<std::size_t>(la.vertex_map[k])];
            auto it = std::find(lb.vertex_map.begin(), lb.vertex_map.end(), target);
            if (it == lb.vertex_map.end()) return false;
            std::size_t j = static_cast<std::size_t>(it - lb.vertex_map.begin());
            hit[j] = 1;
            const auto& ia = la.maps[k];
            const auto& ib = lb.maps[j];
            const auto& p = *psi[static_cast<std::size_t>(la.vertex_map[k])];
            if (fa.modes[k].dim != fb.modes[j].dim) return false;
            if (ia.is_affine() && ib.is_affine()) {
                auto c = compose(p, ia);
                Mat pinv = ib.A.completeOrthogonalDecomposition().pseudoInverse();
                Mat tA = pinv * c.A;
                Vec tb = pinv * (c.b - ib.b);
                if (!near(Mat(ib.A * tA), c.A) || !near(Vec(ib.A * tb + ib.b), c.b)) return false;
                if (tA.rows() != tA.cols() || !Eigen::FullPivLU<Mat>(tA).isInvertible()) return false;
            } else {
                for (const auto& x : halton_samples(fa.modes[k].domain, 16))
                    if (!near(p.apply(ia.apply(x)), ib.apply(x))) return false;
            }
        }
        return std::all_of(hit.begin(), hit.end(), [](char c) { return c != 0; });
    }

    bool assign_maps(int u) {
        if (u == n)
            return legs_ok(a.initial_leg, a.initial, b.initial_leg, b.initial) &&
                   legs_ok(a.final_leg, a.final_, b.final_leg, b.final_);
        for (const auto& m : cand[static_cast<std::size_t>(u)][static_cast<std::size_t>(pi[static_cast<std::size_t>(u)])]) {
            psi[static_cast<std::size_t>(u)] = &m;
            if (resets_ok(u) && assign_maps(u + 1)) return true;
        }
        psi[static_cast<std::size_t>(u)] = nullptr;
        return false;
    }

    bool assign_vertices(int u) {
        if (u == n) return assign_maps(0);
        for (int v = 0; v < n; ++v) {
            if (used[static_cast<std::size_t>(v)] || cand[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)].empty())
                continue;
            pi[static_cast<std::size_t>(u)] = v;
            used[static_cast<std::size_t>(v)] = 1;
            if (adjacency_ok(u) && assign_vertices(u + 1)) return true;
            used[static_cast<std::size_t>(v)] = 0;
            pi[static_cast<std::size_t>(u)] = -1;
        }
        return false;
    }
};

} // namespace

bool conjugacy_iso_check(const DirectedSystem& h1, const DirectedSystem& h2, int max_vertices) {
    for (const auto* h : {&h1, &h2})
        if (h->apex.vertex_count() > max_vertices)
            throw HybridError(ErrorKind::SizeLimitExceeded,
                              fmt::format("conjugacy search is limited to {} vertices, got {}", max_vertices,
                                          h->apex.vertex_count()));
    if (h1.apex.vertex_count() != h2.apex.vertex_count() || h1.apex.edge_count() != h2.apex.edge_count() ||
        h1.initial.vertex_count() != h2.initial.vertex_count() || h1.final_.vertex_count() != h2.final_.vertex_count())
        return false;
    Search s(h1, h2);
    return s.assign_vertices(0);
}

} // namespace hydranav::hybrid
