#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

#include <fmt/format.h>

#include "hydranav/hybrid.hpp"

namespace hydranav::hybrid {

namespace {

struct ModeGrid {
    std::vector<int> counts; // cells per axis (1 on degenerate axes)
    int total = 1;
};

ModeGrid grid_for(const Mode& m, const ChainOptions& opts) {
    ModeGrid g;
    int live = 0;
    for (int i = 0; i < m.dim; ++i)
        if (m.domain.hi(i) > m.domain.lo(i)) ++live;
    int per_axis = opts.grid;
    while (live > 0 && per_axis > 1 && std::pow(static_cast<double>(per_axis), live) > opts.max_cells_per_mode)
        --per_axis;
    for (int i = 0; i < m.dim; ++i) {
        int c = m.domain.hi(i) > m.domain.lo(i) ? per_axis : 1;
        g.counts.push_back(c);
        g.total *= c;
    }
    return g;
}

Vec cell_center(const Mode& m, const ModeGrid& g, int index) {
    Vec c(m.dim);
    for (int i = 0; i < m.dim; ++i) {
        int k = index % g.counts[static_cast<std::size_t>(i)];
        index /= g.counts[static_cast<std::size_t>(i)];
        double w = (m.domain.hi(i) - m.domain.lo(i)) / g.counts[static_cast<std::size_t>(i)];
        c(i) = m.domain.lo(i) + (k + 0.5) * w;
    }
    return c;
}

// Local indices of the cells of `m` meeting the box [lo, hi].
void cells_meeting(const Mode& m, const ModeGrid& g, const Vec& lo, const Vec& hi, std::vector<int>& out) {
    std::vector<int> first(static_cast<std::size_t>(m.dim)), last(static_cast<std::size_t>(m.dim));
    for (int i = 0; i < m.dim; ++i) {
        double a = std::max(lo(i), m.domain.lo(i)), b = std::min(hi(i), m.domain.hi(i));
        if (a > b + kTolerance) return;
        int n = g.counts[static_cast<std::size_t>(i)];
        double span = m.domain.hi(i) - m.domain.lo(i);
        if (span <= 0) {
            first[static_cast<std::size_t>(i)] = last[static_cast<std::size_t>(i)] = 0;
            continue;
        }
        double w = span / n;
        first[static_cast<std::size_t>(i)] = std::clamp(static_cast<int>(std::floor((a - m.domain.lo(i)) / w)), 0, n - 1);
        last[static_cast<std::size_t>(i)] = std::clamp(static_cast<int>(std::floor((b - m.domain.lo(i)) / w)), 0, n - 1);
    }
    std::vector<int> idx = first;
    for (;;) {
        int flat = 0, stride = 1;
        for (int i = 0; i < m.dim; ++i) {
            flat += idx[static_cast<std::size_t>(i)] * stride;
            stride *= g.counts[static_cast<std::size_t>(i)];
        }
        out.push_back(flat);
        int i = 0;
        for (; i < m.dim; ++i) {
            if (++idx[static_cast<std::size_t>(i)] <= last[static_cast<std::size_t>(i)]) break;
            idx[static_cast<std::size_t>(i)] = first[static_cast<std::size_t>(i)];
        }
        if (i == m.dim) return;
    }
}

// Fixed-step RK4 over the horizon, clamped to the mode domain after each step.
Vec integrate(const Mode& m, Vec x, double horizon) {
    constexpr int kSteps = 256;
    const double h = horizon / kSteps;
    for (int s = 0; s < kSteps; ++s) {
        Vec k1 = m.flow(x);
        Vec k2 = m.flow(m.domain.clamp(x + 0.5 * h * k1));
        Vec k3 = m.flow(m.domain.clamp(x + 0.5 * h * k2));
        Vec k4 = m.flow(m.domain.clamp(x + h * k3));
        x = m.domain.clamp(x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4));
    }
    return x;
}

} // namespace

CellGraph build_cell_graph(const HybridSystem& h, const ChainOptions& opts, bool parallel) {
    CellGraph g;
    std::vector<ModeGrid> grids;
    for (int v = 0; v < h.vertex_count(); ++v) {
        const auto& m = h.modes[static_cast<std::size_t>(v)];
        grids.push_back(grid_for(m, opts));
        g.first_cell.push_back(static_cast<int>(g.mode_of.size()));
        for (int c = 0; c < grids.back().total; ++c) {
            g.mode_of.push_back(v);
            g.center.push_back(cell_center(m, grids.back(), c));
        }
    }
    g.first_cell.push_back(static_cast<int>(g.mode_of.size()));
    g.succ.assign(g.mode_of.size(), {});

    std::vector<std::vector<int>> out_edges(static_cast<std::size_t>(h.vertex_count()));
    for (int e = 0; e < h.edge_count(); ++e)
        out_edges[static_cast<std::size_t>(h.edges[static_cast<std::size_t>(e)].src)].push_back(e);

    const long n = static_cast<long>(g.mode_of.size());
#pragma omp parallel for schedule(dynamic, 64) if (parallel)
    for (long c = 0; c < n; ++c) {
        const int v = g.mode_of[static_cast<std::size_t>(c)];
        const auto& m = h.modes[static_cast<std::size_t>(v)];
        auto& succ = g.succ[static_cast<std::size_t>(c)];
        std::vector<int> local;
        Vec end = integrate(m, g.center[static_cast<std::size_t>(c)], opts.horizon);
        Vec fat = Vec::Constant(m.dim, opts.eps);
        cells_meeting(m, grids[static_cast<std::size_t>(v)], end - fat, end + fat, local);
        for (int l : local) succ.push_back(g.first_cell[static_cast<std::size_t>(v)] + l);
        for (int e : out_edges[static_cast<std::size_t>(v)]) {
            const auto& r = h.edges[static_cast<std::size_t>(e)];
            const auto& dm = h.modes[static_cast<std::size_t>(r.dst)];
            Vec q = r.apply(g.center[static_cast<std::size_t>(c)]);
            Vec dfat = Vec::Constant(dm.dim, opts.eps);
            local.clear();
            cells_meeting(dm, grids[static_cast<std::size_t>(r.dst)], q - dfat, q + dfat, local);
            for (int l : local) succ.push_back(g.first_cell[static_cast<std::size_t>(r.dst)] + l);
        }
        std::sort(succ.begin(), succ.end());
        succ.erase(std::unique(succ.begin(), succ.end()), succ.end());
    }
    return g;
}

std::vector<char> target_cells(const CellGraph& g, const HybridSystem& h, int mode, const Box& target, double eps,
                               const ChainOptions& opts) {
    std::vector<char> out(g.mode_of.size(), 0);
    const auto& m = h.modes[static_cast<std::size_t>(mode)];
    std::vector<int> local;
    Vec fat = Vec::Constant(m.dim, eps);
    cells_meeting(m, grid_for(m, opts), target.lo - fat, target.hi + fat, local);
    for (int l : local) out[static_cast<std::size_t>(g.first_cell[static_cast<std::size_t>(mode)] + l)] = 1;
    return out;
}

namespace {

// Bounding box of the image of a box under a vertex map (exact for affine maps).
Box image_box(const VertexMap& m, const Box& b) {
    const int d = b.dim();
    Box out{Vec::Constant(m.out_dim(), INFINITY), Vec::Constant(m.out_dim(), -INFINITY)};
    auto extend = [&](const Vec& x) {
        Vec y = m.apply(x);
        out.lo = out.lo.cwiseMin(y);
        out.hi = out.hi.cwiseMax(y);
    };
    if (d <= 12) {
        for (int mask = 0; mask < (1 << d); ++mask) {
            Vec x(d);
            for (int i = 0; i < d; ++i) x(i) = (mask >> i & 1) ? b.hi(i) : b.lo(i);
            extend(x);
        }
    }
    if (!m.is_affine())
        for (const auto& x : halton_samples(b, 64)) extend(x);
    return out;
}

} // namespace

DirectedReport validate_directed(const DirectedSystem& d, const ChainOptions& opts) {
    DirectedReport rep;
    auto push = [](Report& r, ErrorKind k, int v, int e, Vec w, std::string msg) {
        r.failures.push_back({k, v, e, std::move(w), std::move(msg)});
    };
    auto leg_i = validate_semiconjugacy(d.initial_leg, d.initial, d.apex);
    auto leg_f = validate_semiconjugacy(d.final_leg, d.final_, d.apex);
    for (auto& f : leg_i.failures) {
        f.message = "initial leg: " + f.message;
        rep.legs.failures.push_back(f);
    }
    for (auto& f : leg_f.failures) {
        f.message = "final leg: " + f.message;
        rep.legs.failures.push_back(f);
    }
    if (rep.legs.has(ErrorKind::DimensionMismatch)) return rep;

    // (i) embeddings
    for (const auto* leg : {&d.initial_leg, &d.final_leg}) {
        const auto& foot = leg == &d.initial_leg ? d.initial : d.final_;
        const char* name = leg == &d.initial_leg ? "initial" : "final";
        std::set<int> seen;
        for (std::size_t v = 0; v < leg->vertex_map.size(); ++v)
            if (!seen.insert(leg->vertex_map[v]).second)
                push(rep.embedding, ErrorKind::Injectivity, static_cast<int>(v), -1, {},
                     fmt::format("{} leg sends two vertices to apex vertex {}", name, leg->vertex_map[v]));
        seen.clear();
        for (std::size_t e = 0; e < leg->edge_map.size(); ++e)
            if (!seen.insert(leg->edge_map[e]).second)
                push(rep.embedding, ErrorKind::Injectivity, -1, static_cast<int>(e),
                     {}, fmt::format("{} leg sends two edges to apex edge {}", name, leg->edge_map[e]));
        for (std::size_t v = 0; v < leg->maps.size(); ++v) {
            const auto& m = leg->maps[v];
            bool ok = true;
            if (m.is_affine()) {
                ok = Eigen::FullPivLU<Mat>(m.A).rank() == m.A.cols();
            } else {
                for (const auto& x : halton_samples(foot.modes[v].domain, 16))
                    if (Eigen::FullPivLU<Mat>(m.jacobian(x)).rank() != m.in_dim()) ok = false;
            }
            if (!ok)
                push(rep.embedding, ErrorKind::Injectivity, static_cast<int>(v), -1, {},
                     fmt::format("{} leg map at vertex {} is not injective", name, v));
        }
    }

    // (ii) right leg invertible
    for (std::size_t v = 0; v < d.final_leg.maps.size(); ++v) {
        const auto& m = d.final_leg.maps[v];
        bool ok = m.in_dim() == m.out_dim();
        if (ok && m.is_affine()) ok = m.A.size() == 0 || std::abs(m.A.determinant()) > kTolerance;
        if (ok && !m.is_affine())
            for (const auto& x : halton_samples(d.final_.modes[v].domain, 16))
                if (std::abs(m.jacobian(x).determinant()) <= kTolerance) ok = false;
        if (!ok)
            push(rep.invertibility, ErrorKind::Invertibility, static_cast<int>(v), -1, {},
                 fmt::format("final leg map at vertex {} is not invertible", v));
    }

    // (iii) sink
    std::set<int> image(d.final_leg.vertex_map.begin(), d.final_leg.vertex_map.end());
    for (int e = 0; e < d.apex.edge_count(); ++e) {
        const auto& r = d.apex.edges[static_cast<std::size_t>(e)];
        if (image.count(r.src) && !image.count(r.dst))
            push(rep.sink, ErrorKind::SinkViolation, r.src, e, {},
                 fmt::format("edge {} leaves the final subsystem: {} -> {}", e, r.src, r.dst));
    }

    // (iv) (eps, T)-chains, on the grid abstraction
    auto graph = build_cell_graph(d.apex, opts);
    const std::size_t n = graph.mode_of.size();
    std::vector<char> reach(n, 0);
    for (int k = 0; k < d.final_.vertex_count(); ++k) {
        int v = d.final_leg.vertex_map[static_cast<std::size_t>(k)];
        auto box = image_box(d.final_leg.maps[static_cast<std::size_t>(k)], d.final_.modes[static_cast<std::size_t>(k)].domain);
        auto t = target_cells(graph, d.apex, v, box, opts.eps, opts);
        for (std::size_t c = 0; c < n; ++c) reach[c] |= t[c];
    }
    std::vector<std::vector<int>> pred(n);
    for (std::size_t c = 0; c < n; ++c)
        for (int s : graph.succ[c]) pred[static_cast<std::size_t>(s)].push_back(static_cast<int>(c));
    std::deque<int> queue;
    for (std::size_t c = 0; c < n; ++c)
        if (reach[c]) queue.push_back(static_cast<int>(c));
    while (!queue.empty()) {
        int c = queue.front();
        queue.pop_front();
        for (int p : pred[static_cast<std::size_t>(c)])
            if (!reach[static_cast<std::size_t>(p)]) {
                reach[static_cast<std::size_t>(p)] = 1;
                queue.push_back(p);
            }
    }
    rep.cells = static_cast<int>(n);
    for (std::size_t c = 0; c < n; ++c) {
        if (reach[c]) {
            ++rep.reached;
        } else if (rep.chain.failures.empty()) {
            push(rep.chain, ErrorKind::ChainFailure, graph.mode_of[c], -1, graph.center[c],
                 fmt::format("cell {} of mode {} has no (eps, T)-chain into the final subsystem", c,
                             graph.mode_of[c]));
        }
    }
    return rep;
}

} // namespace hydranav::hybrid
