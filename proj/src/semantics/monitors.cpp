#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

#include "hydranav/semantics.hpp"
#include "hydranav/typechecker.hpp"

namespace hydranav::sem {

UncertaintySet::UncertaintySet(std::vector<double> lo, std::vector<double> hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.size() != hi_.size()) throw SemanticsError("uncertainty bounds differ in length");
    for (std::size_t j = 0; j < lo_.size(); ++j)
        if (!(lo_[j] >= 0.0) || !(lo_[j] <= hi_[j]))
            throw SemanticsError(fmt::format("ray {}: bounds [{}, {}] are not an interval in [0, inf]", j, lo_[j], hi_[j]));
}

UncertaintySet UncertaintySet::exact(const Scan& f) { return {f, f}; }

UncertaintySet UncertaintySet::around(const Scan& f, double eta) {
    std::vector<double> lo(f.size()), hi(f.size());
    for (std::size_t j = 0; j < f.size(); ++j) {
        lo[j] = std::isinf(f[j]) ? f[j] : std::max(0.0, f[j] - eta);
        hi[j] = std::isinf(f[j]) ? f[j] : f[j] + eta;
    }
    return {lo, hi};
}

bool UncertaintySet::contains(const Scan& f) const {
    if (f.size() != size()) return false;
    for (std::size_t j = 0; j < f.size(); ++j)
        if (f[j] < lo_[j] || f[j] > hi_[j]) return false;
    return true;
}

bool UncertaintySet::subset_of(const UncertaintySet& u) const {
    if (u.size() != size()) return false;
    for (std::size_t j = 0; j < size(); ++j)
        if (lo_[j] < u.lo_[j] || hi_[j] > u.hi_[j]) return false;
    return true;
}

std::string_view to_string(Verdict v) {
    switch (v) {
    case Verdict::Holds: return "holds";
    case Verdict::Fails: return "fails";
    case Verdict::Indeterminate: return "indeterminate";
    }
    return "?";
}

int circular_components(const std::vector<char>& mask) {
    const std::size_t n = mask.size();
    int starts = 0;
    bool any_clear = false;
    for (std::size_t j = 0; j < n; ++j) {
        if (!mask[j]) any_clear = true;
        else if (!mask[(j + n - 1) % n]) ++starts;
    }
    if (!any_clear) return n > 0 ? 1 : 0;
    return starts;
}

CountRange see_count_range(const UncertaintySet& u, double m) {
    // Ray j is forced into the sublevel set when hi <= m, forced out when lo > m,
    // and free otherwise. Attainable counts form an interval (one flip moves the
    // count by at most one), so the extremes determine everything.
    // DP state: (first bit, previous bit, seen a clear ray) -> extreme run-start count.
    const std::size_t n = u.size();
    if (n == 0) return {0, 0};
    constexpr int kNone = 1 << 29;
    using Table = std::array<std::array<std::array<std::pair<int, int>, 2>, 2>, 2>; // {min, max}
    Table cur;
    for (auto& a : cur)
        for (auto& b : a)
            for (auto& c : b) c = {kNone, -kNone};
    auto options = [&](std::size_t j) {
        std::vector<int> bits;
        if (u.lo(j) <= m) bits.push_back(1);
        if (u.hi(j) > m) bits.push_back(0);
        return bits;
    };
    for (int b : options(0)) cur[b][b][b == 0] = {0, 0};
    for (std::size_t j = 1; j < n; ++j) {
        Table next;
        for (auto& a : next)
            for (auto& b : a)
                for (auto& c : b) c = {kNone, -kNone};
        for (int f = 0; f < 2; ++f)
            for (int p = 0; p < 2; ++p)
                for (int z = 0; z < 2; ++z) {
                    auto [lo, hi] = cur[f][p][z];
                    if (lo == kNone) continue;
                    for (int b : options(j)) {
                        int add = (b == 1 && p == 0) ? 1 : 0;
                        auto& slot = next[f][b][z || b == 0];
                        slot.first = std::min(slot.first, lo + add);
                        slot.second = std::max(slot.second, hi + add);
                    }
                }
        cur = next;
    }
    CountRange r{kNone, -kNone};
    for (int f = 0; f < 2; ++f)
        for (int p = 0; p < 2; ++p)
            for (int z = 0; z < 2; ++z) {
                auto [lo, hi] = cur[f][p][z];
                if (lo == kNone) continue;
                int wrap = (f == 1 && p == 0) ? 1 : 0;
                int vlo = z ? lo + wrap : 1, vhi = z ? hi + wrap : 1;
                r.min = std::min(r.min, vlo);
                r.max = std::max(r.max, vhi);
            }
    return r;
}

Verdict monitor_see(const UncertaintySet& u, int n, double m) {
    auto r = see_count_range(u, m);
    if (r.min == n && r.max == n) return Verdict::Holds;
    if (n < r.min || n > r.max) return Verdict::Fails;
    return Verdict::Indeterminate;
}

Verdict monitor_at(const Point& x_est, double est_radius, const Point& g, double eps) {
    return (x_est - g).norm() + est_radius < eps ? Verdict::Holds : Verdict::Fails;
}

SafeVerdict monitor_safe(const UncertaintySet& u, double r, SafeMode mode) {
    SafeVerdict v;
    for (std::size_t j = 0; j < u.size(); ++j) {
        double b = mode == SafeMode::Conservative ? u.lo(j) : u.hi(j);
        if (b < v.witness_value) {
            v.witness_value = b;
            v.witness_ray = static_cast<int>(j);
        }
    }
    v.verdict = v.witness_value > r ? Verdict::Holds : Verdict::Fails;
    return v;
}

UncertaintySet restrict(const UncertaintySet& u, const UncertaintySet& sub) {
    if (sub.size() != u.size())
        throw NotASubset(fmt::format("restriction has {} rays, the set has {}", sub.size(), u.size()));
    for (std::size_t j = 0; j < u.size(); ++j)
        if (sub.lo(j) < u.lo(j) || sub.hi(j) > u.hi(j))
            throw NotASubset(fmt::format("ray {}: [{}, {}] is not inside [{}, {}]", j, sub.lo(j), sub.hi(j), u.lo(j),
                                         u.hi(j)));
    return sub;
}

namespace {

using hybrid::Box;
using hybrid::HybridSystem;
using hybrid::Mode;
using hybrid::Vec;

HybridSystem one_mode(Mode m) {
    HybridSystem h;
    h.modes.push_back(std::move(m));
    return h;
}

} // namespace

Denotation denote(const syntax::TypePtr& t, const DenoteOptions& opts) {
    using syntax::TermKind;
    using syntax::TypeKind;
    auto ty = check::normalize(t);
    Denotation d;
    switch (ty->kind) {
    case TypeKind::See: {
        const auto& arg = ty->args[0];
        if (arg->kind != TermKind::NatLit)
            throw NotDenotable(fmt::format("See needs a literal count, got {}", syntax::print(arg)));
        const int n = static_cast<int>(arg->nat);
        Mode m;
        m.label = fmt::format("See({})", n);
        m.dim = 2 * n + n; // X^n x R^n with X the plane
        m.domain.lo.resize(m.dim);
        m.domain.hi.resize(m.dim);
        for (int i = 0; i < 2 * n; ++i) {
            m.domain.lo(i) = -opts.workspace;
            m.domain.hi(i) = opts.workspace;
        }
        for (int i = 2 * n; i < m.dim; ++i) {
            m.domain.lo(i) = 0.0;
            m.domain.hi(i) = opts.sensor_range;
        }
        m.field.assign(static_cast<std::size_t>(m.dim), expr::constant(0.0));
        d.system = one_mode(std::move(m));
        const double range = opts.sensor_range;
        d.monitor = [n, range](const MonitorInput& in) { return monitor_see(in.u, n, range); };
        return d;
    }
    case TypeKind::At: {
        const auto& arg = ty->args[0];
        if (arg->kind != TermKind::PointLit)
            throw NotDenotable(fmt::format("At needs a point literal, got {}", syntax::print(arg)));
        Point g(arg->x, arg->y);
        Mode m;
        m.label = fmt::format("At({}, {})", g.x(), g.y());
        m.dim = 2;
        m.domain = Box{Vec::Constant(2, -opts.workspace), Vec::Constant(2, opts.workspace)};
        // -grad |x - g|^2 = -2 (x - g)
        for (int i = 0; i < 2; ++i)
            m.field.push_back(expr::mul(expr::constant(-2.0), expr::sub(expr::variable(i), expr::constant(g(i)))));
        d.system = one_mode(std::move(m));
        const double eps = opts.goal_tolerance;
        d.monitor = [g, eps](const MonitorInput& in) { return monitor_at(in.pose, in.pose_radius, g, eps); };
        return d;
    }
    case TypeKind::Safe: {
        Mode m;
        m.label = "Safe(" + syntax::print(ty->args[0]) + ")";
        d.system = one_mode(std::move(m));
        const double r = opts.safety_radius;
        const auto mode = opts.safe_mode;
        d.monitor = [r, mode](const MonitorInput& in) { return monitor_safe(in.u, r, mode).verdict; };
        return d;
    }
    case TypeKind::Unit: {
        Mode m;
        m.label = "Unit";
        d.system = one_mode(std::move(m));
        d.monitor = [](const MonitorInput&) { return Verdict::Holds; };
        return d;
    }
    default:
        throw NotDenotable(fmt::format("{} is not a simple type; compound types are built with the hybrid operations",
                                       syntax::print(ty)));
    }
}

} // namespace hydranav::sem
