#include <random>

#include <doctest.h>

#include "hydranav/semantics.hpp"
#include "hydranav/syntax.hpp"

using namespace hydranav;
using namespace hydranav::sem;

namespace {

// Rotate so the scan starts on a clear ray, then count runs left to right.
int oracle_components(const std::vector<char>& mask) {
    const std::size_t n = mask.size();
    std::size_t start = n;
    for (std::size_t j = 0; j < n; ++j)
        if (!mask[j]) {
            start = j;
            break;
        }
    if (start == n) return n ? 1 : 0;
    int runs = 0;
    bool in_run = false;
    for (std::size_t k = 0; k < n; ++k) {
        bool b = mask[(start + k) % n];
        if (b && !in_run) ++runs;
        in_run = b;
    }
    return runs;
}

// Every sublevel pattern reachable from U, enumerated directly.
CountRange oracle_range(const UncertaintySet& u, double m) {
    const std::size_t n = u.size();
    std::vector<std::vector<char>> choices(n);
    for (std::size_t j = 0; j < n; ++j) {
        if (u.lo(j) <= m) choices[j].push_back(1);
        if (u.hi(j) > m) choices[j].push_back(0);
    }
    CountRange r{1 << 20, -1};
    std::vector<std::size_t> idx(n, 0);
    while (true) {
        std::vector<char> mask(n);
        for (std::size_t j = 0; j < n; ++j) mask[j] = choices[j][idx[j]];
        int c = oracle_components(mask);
        r.min = std::min(r.min, c);
        r.max = std::max(r.max, c);
        std::size_t j = 0;
        while (j < n && ++idx[j] == choices[j].size()) idx[j++] = 0;
        if (j == n) break;
    }
    return r;
}

UncertaintySet random_set(std::mt19937& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(0.0, 10.0);
    std::vector<double> lo(n), hi(n);
    for (std::size_t j = 0; j < n; ++j) {
        if (rng() % 5 == 0) {
            lo[j] = hi[j] = kInf;
            continue;
        }
        double a = u(rng), b = u(rng);
        if (rng() % 3 == 0) b = a;
        lo[j] = std::min(a, b);
        hi[j] = rng() % 7 == 0 ? kInf : std::max(a, b);
    }
    return {lo, hi};
}

UncertaintySet random_subset(std::mt19937& rng, const UncertaintySet& u) {
    std::vector<double> lo(u.size()), hi(u.size());
    std::uniform_real_distribution<double> t(0.0, 1.0);
    for (std::size_t j = 0; j < u.size(); ++j) {
        if (std::isinf(u.hi(j))) {
            lo[j] = std::isinf(u.lo(j)) ? kInf : u.lo(j) + t(rng) * 3;
            hi[j] = rng() % 2 ? kInf : lo[j] + t(rng);
            if (std::isinf(u.lo(j))) hi[j] = kInf;
            continue;
        }
        double a = u.lo(j) + t(rng) * (u.hi(j) - u.lo(j));
        double b = u.lo(j) + t(rng) * (u.hi(j) - u.lo(j));
        lo[j] = std::min(a, b);
        hi[j] = std::max(a, b);
    }
    return {lo, hi};
}

Verdict from_range(CountRange r, int n) {
    if (r.min == n && r.max == n) return Verdict::Holds;
    if (n < r.min || n > r.max) return Verdict::Fails;
    return Verdict::Indeterminate;
}

} // namespace

TEST_CASE("circular components against a rotated linear count") {
    std::mt19937 rng(3);
    for (int t = 0; t < 2000; ++t) {
        std::vector<char> mask(rng() % 12);
        for (auto& b : mask) b = static_cast<char>(rng() % 2);
        CHECK(circular_components(mask) == oracle_components(mask));
    }
    CHECK(circular_components({1, 1, 0, 0, 1}) == 1);
    CHECK(circular_components({1, 1, 1}) == 1);
    CHECK(circular_components({0, 0}) == 0);
}

TEST_CASE("see count range matches enumeration") {
    std::mt19937 rng(17);
    for (int t = 0; t < 400; ++t) {
        auto u = random_set(rng, 1 + rng() % 10);
        double m = 5.0;
        auto got = see_count_range(u, m);
        auto want = oracle_range(u, m);
        CHECK(got.min == want.min);
        CHECK(got.max == want.max);
        for (int n = 0; n < 7; ++n) CHECK(monitor_see(u, n, m) == from_range(want, n));
    }
}

TEST_CASE("exact scans have a determinate count") {
    Scan f{1.0, 1.0, kInf, 2.0, kInf, kInf, 7.0, 1.5};
    auto u = UncertaintySet::exact(f);
    CHECK(monitor_see(u, 2, 5.0) == Verdict::Holds);
    CHECK(monitor_see(u, 3, 5.0) == Verdict::Fails);
    CHECK(monitor_see(u, 2, 8.0) == Verdict::Holds);
    CHECK(monitor_see(u, 1, 1.2) == Verdict::Holds);
    CHECK(monitor_see(u, 1, 0.5) == Verdict::Fails);
}

TEST_CASE("see and conservative safe are monotone under restriction") {
    std::mt19937 rng(29);
    for (int t = 0; t < 400; ++t) {
        auto u = random_set(rng, 1 + rng() % 9);
        auto sub = restrict(u, random_subset(rng, u));
        for (int n = 0; n < 5; ++n) {
            auto big = monitor_see(u, n, 5.0);
            if (big != Verdict::Indeterminate) CHECK(monitor_see(sub, n, 5.0) == big);
        }
        if (monitor_safe(u, 2.0).verdict == Verdict::Holds) CHECK(monitor_safe(sub, 2.0).verdict == Verdict::Holds);
    }
}

TEST_CASE("optimistic safe reading is not monotone") {
    UncertaintySet u({0.3, 4.0}, {3.0, 4.0});
    CHECK(monitor_safe(u, 1.0, SafeMode::Optimistic).verdict == Verdict::Holds);
    auto sub = restrict(u, UncertaintySet({0.3, 4.0}, {0.3, 4.0}));
    CHECK(monitor_safe(sub, 1.0, SafeMode::Optimistic).verdict == Verdict::Fails);
    CHECK(monitor_safe(u, 1.0).verdict == Verdict::Fails);
    auto w = monitor_safe(u, 1.0);
    CHECK(w.witness_ray == 0);
    CHECK(w.witness_value == 0.3);
}

TEST_CASE("safe is strict at the radius") {
    CHECK(monitor_safe(UncertaintySet::exact({1.0, 2.0}), 1.0).verdict == Verdict::Fails);
    CHECK(monitor_safe(UncertaintySet::exact({1.0 + 1e-12, 2.0}), 1.0).verdict == Verdict::Holds);
    CHECK(monitor_safe(UncertaintySet::exact({kInf, kInf}), 1.0).verdict == Verdict::Holds);
}

TEST_CASE("at requires the whole estimate inside the tolerance") {
    Point g(1.0, 2.0);
    CHECK(monitor_at({1.0, 2.0}, 0.0, g, 0.05) == Verdict::Holds);
    CHECK(monitor_at({1.03, 2.0}, 0.01, g, 0.05) == Verdict::Holds);
    CHECK(monitor_at({1.03, 2.0}, 0.02, g, 0.05) == Verdict::Fails);
    CHECK(monitor_at({1.05, 2.0}, 0.0, g, 0.05) == Verdict::Fails);
}

TEST_CASE("restriction rejects sets that are not subsets") {
    UncertaintySet u({1.0, 2.0}, {3.0, 4.0});
    CHECK_THROWS_AS(restrict(u, UncertaintySet({0.5, 2.0}, {3.0, 4.0})), NotASubset);
    CHECK_THROWS_AS(restrict(u, UncertaintySet({1.0}, {3.0})), NotASubset);
    CHECK_THROWS_AS(UncertaintySet({2.0}, {1.0}), SemanticsError);
    auto around = UncertaintySet::around({1.0, kInf, 0.1}, 0.5);
    CHECK(around.lo(0) == 0.5);
    CHECK(around.hi(0) == 1.5);
    CHECK(around.lo(2) == 0.0);
    CHECK(std::isinf(around.lo(1)));
}

TEST_CASE("denotation of At descends the squared distance") {
    auto d = denote(syntax::parse_type("At(pt(1.5, -2))"));
    REQUIRE(d.system.vertex_count() == 1);
    const auto& m = d.system.modes[0];
    CHECK(m.dim == 2);
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int t = 0; t < 20; ++t) {
        hybrid::Vec x(2);
        x << u(rng), u(rng);
        auto phi = [](const hybrid::Vec& p) { return (p - hybrid::Vec((hybrid::Vec(2) << 1.5, -2.0).finished())).squaredNorm(); };
        const double h = 1e-5;
        for (int i = 0; i < 2; ++i) {
            hybrid::Vec a = x, b = x;
            a(i) += h;
            b(i) -= h;
            CHECK(m.flow(x)(i) == doctest::Approx(-(phi(a) - phi(b)) / (2 * h)).epsilon(1e-6));
        }
    }
    MonitorInput in;
    in.pose = Point(1.5, -2.0);
    CHECK(d.monitor(in) == Verdict::Holds);
    in.pose = Point(0, 0);
    CHECK(d.monitor(in) == Verdict::Fails);
}

TEST_CASE("denotation of See, Safe and Unit") {
    auto see = denote(syntax::parse_type("See(3)"));
    CHECK(see.system.modes[0].dim == 9);
    CHECK(see.system.modes[0].domain.hi(8) == 5.0);
    MonitorInput in;
    in.u = UncertaintySet::exact({1, kInf, 1, kInf, 1, kInf});
    CHECK(see.monitor(in) == Verdict::Holds);

    DenoteOptions o;
    o.safety_radius = 2.0;
    auto safe = denote(syntax::parse_type("Safe(c)"), o);
    CHECK(safe.system.modes[0].dim == 0);
    in.u = UncertaintySet::exact({1.5, 3.0});
    CHECK(safe.monitor(in) == Verdict::Fails);

    auto unit = denote(syntax::parse_type("Unit"));
    CHECK(unit.monitor(in) == Verdict::Holds);
}

TEST_CASE("compound and symbolic types are not denotable") {
    CHECK_THROWS_AS(denote(syntax::parse_type("See(n)")), NotDenotable);
    CHECK_THROWS_AS(denote(syntax::parse_type("See(1) * See(2)")), NotDenotable);
    CHECK_THROWS_AS(denote(syntax::parse_type("At(g)")), NotDenotable);
    CHECK_NOTHROW(denote(syntax::parse_type("See((\\'k. k) @ 2)")));
}
