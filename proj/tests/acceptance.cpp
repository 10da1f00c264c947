// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "unit/common.hpp"
#include "unit/hybrid_gen.hpp"
#include "hydranav/ltl.hpp"
#include "hydranav/nav.hpp"
#include "hydranav/semantics.hpp"
#include "hydranav/typechecker.hpp"

using namespace hydranav;

namespace {

struct Result {
    bool ok = true;
    std::string detail;
    void fail(const std::string& why) {
        if (ok) detail = why;
        ok = false;
    }
};

struct Shell {
    int status;
    std::string output;
};

Shell run_cli(const std::string& args) {
    const std::string cmd = std::string(HYDRANAV_CLI) + " " + args + " 2>&1";
    Shell r{-1, {}};
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) r.output.append(buf, n);
    int st = pclose(p);
    r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Result typechecker_corpus() {
    Result r;
    auto t0 = Clock::now();
    auto corpus = run_cli("check --allow-holes " + source_path("corpus/nav.hdt"));
    if (corpus.status != 0) r.fail("corpus exit " + std::to_string(corpus.status) + ": " + corpus.output);
    int faults = 0;
    for (const auto& entry : std::filesystem::directory_iterator(source_path("tests/fixtures/faults"))) {
        std::ifstream in(entry.path());
        std::string first;
        std::getline(in, first);
        const std::string code = first.substr(first.find(':') + 2);
        auto res = run_cli("check --allow-holes " + entry.path().string());
        if (res.status != 1) r.fail(entry.path().filename().string() + ": exit " + std::to_string(res.status));
        if (res.output.find("error[" + code + "]") == std::string::npos)
            r.fail(entry.path().filename().string() + ": missing error[" + code + "]");
        ++faults;
    }
    if (faults != 10) r.fail(fmt::format("{} fault files, expected 10", faults));
    const double dt = seconds_since(t0);
    if (dt >= 1.0) r.fail(fmt::format("took {:.2f} s", dt));
    if (r.ok) r.detail = fmt::format("corpus ok, {} faults rejected, {:.2f} s", faults, dt);
    return r;
}

Result semiring_laws() {
    using check::Index;
    Result r;
    const Index all[] = {Index::Zero, Index::One, Index::Omega};
    auto count = [](Index k) { return k == Index::Zero ? 0 : k == Index::One ? 1 : 2; };
    auto abs = [](int n) { return n == 0 ? Index::Zero : n == 1 ? Index::One : Index::Omega; };
    int cases = 0;
    for (Index a : all)
        for (Index b : all) {
            ++cases;
            if (check::add(a, b) != abs(count(a) + count(b))) r.fail("add table");
            if (check::mul(a, b) != abs(count(a) * count(b))) r.fail("mul table");
            if (check::add(a, b) != check::add(b, a) || check::mul(a, b) != check::mul(b, a)) r.fail("commutativity");
            for (Index c : all) {
                ++cases;
                if (check::add(check::add(a, b), c) != check::add(a, check::add(b, c))) r.fail("add associativity");
                if (check::mul(check::mul(a, b), c) != check::mul(a, check::mul(b, c))) r.fail("mul associativity");
                if (check::mul(a, check::add(b, c)) != check::add(check::mul(a, b), check::mul(a, c)))
                    r.fail("distributivity");
            }
        }
    std::mt19937 rng(1);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = rng() % 8;
        std::vector<std::string> names;
        std::vector<Index> a, b, c;
        for (std::size_t i = 0; i < n; ++i) {
            names.push_back(fmt::format("v{}", i));
            a.push_back(all[rng() % 3]);
            b.push_back(all[rng() % 3]);
            c.push_back(all[rng() % 3]);
        }
        const check::UsageVector ua(names, a), ub(names, b), uc(names, c);
        auto ab = check::ctx_add(ua, ub);
        auto ba = check::ctx_add(ub, ua);
        auto left = check::ctx_add(ab, uc);
        auto right = check::ctx_add(ua, check::ctx_add(ub, uc));
        if (ab != ba) r.fail(fmt::format("ctx_add commutativity, case {}", t));
        if (left != right) r.fail(fmt::format("ctx_add associativity, case {}", t));
    }
    if (r.ok) r.detail = fmt::format("{} table cases, 1000 context cases", cases);
    return r;
}

Result ltl_golden() {
    Result r;
    auto env = ltl::AtomEnv::from_source(read_text("corpus/nav.env"));
    std::ifstream in(source_path("tests/fixtures/ltl/golden.txt"));
    std::string line;
    int cases = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto sep = line.find(" ==> ");
        auto got = syntax::print(ltl::translate_ltl(ltl::parse_ltl(line.substr(0, sep)), env));
        if (got != line.substr(sep + 5)) r.fail(line.substr(0, sep) + " gave " + got);
        ++cases;
    }
    if (cases != 20) r.fail(fmt::format("{} golden lines, expected 20", cases));

    // Controller type: translation, then the three documented rearrangement steps.
    namespace mk = syntax::make;
    auto t = ltl::translate_ltl(ltl::parse_ltl("separated \\/ (<> at_goal /\\ [] safe)"), env);
    const auto& eventually = t->kids[1]->kids[0];
    auto step1 = mk::lin_pi("", eventually->kids[0], mk::sum(eventually->kids[1], env.atoms.find("violated")->second));
    auto step2 = mk::tensor("c", step1, t->kids[1]->kids[1]);
    auto step3 = mk::param_pi("", mk::prop("Clearance", {mk::var("x0")}), mk::sum(t->kids[0], step2));
    auto fixture = syntax::parse_module(read_text("corpus/nav.env") + read_text("tests/fixtures/ltl/controller.hdt"));
    if (!syntax::alpha_equal(step3, fixture.decls.back().type)) r.fail("controller type differs from the fixture");
    if (!check::check_decl_file(fixture, {false}).ok()) r.fail("controller fixture does not check");
    if (r.ok) r.detail = fmt::format("{} golden translations, controller type reproduced", cases);
    return r;
}

Result hybrid_algebra() {
    using namespace hybrid;
    Result r;
    auto t0 = Clock::now();
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto t = gen::random_triple(seed);
        auto h12 = compose_sequential(t.h1, t.h2);
        auto h23 = compose_sequential(t.h2, t.h3);
        const int vk1 = static_cast<int>(t.k1.size()), vk2 = static_cast<int>(t.k2.size());
        if (h12.apex.vertex_count() != t.h1.apex.vertex_count() + t.h2.apex.vertex_count() - vk1)
            r.fail(fmt::format("seed {}: |V(h1;h2)|", seed));
        if (h23.apex.vertex_count() != t.h2.apex.vertex_count() + t.h3.apex.vertex_count() - vk2)
            r.fail(fmt::format("seed {}: |V(h2;h3)|", seed));
        if (h12.apex.edge_count() != t.h1.apex.edge_count() + t.h2.apex.edge_count())
            r.fail(fmt::format("seed {}: |E(h1;h2)|", seed));
        if (!conjugacy_iso_check(compose_sequential(h12, t.h3), compose_sequential(t.h1, h23)))
            r.fail(fmt::format("seed {}: associativity", seed));
        if (!conjugacy_iso_check(compose_sequential(identity_cospan(t.h1.initial), t.h1), t.h1))
            r.fail(fmt::format("seed {}: left unit", seed));
        if (!conjugacy_iso_check(compose_sequential(t.h1, identity_cospan(t.h1.final_)), t.h1))
            r.fail(fmt::format("seed {}: right unit", seed));
    }
    const double dt = seconds_since(t0);
    if (dt >= 30.0) r.fail(fmt::format("took {:.2f} s", dt));
    if (r.ok) r.detail = fmt::format("100 triples, {:.2f} s", dt);
    return r;
}

int oracle_components(const std::vector<char>& mask) {
    const std::size_t n = mask.size();
    std::size_t start = n;
    for (std::size_t j = 0; j < n && start == n; ++j)
        if (!mask[j]) start = j;
    if (start == n) return n ? 1 : 0;
    int runs = 0;
    bool prev = false;
    for (std::size_t k = 0; k < n; ++k) {
        bool b = mask[(start + k) % n];
        runs += b && !prev;
        prev = b;
    }
    return runs;
}

Result monitor_oracle() {
    using namespace sem;
    Result r;
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    const double m = 5.0;
    auto random_scan = [&](std::size_t n) {
        Scan f(n);
        // Long runs make multi-component patterns likely.
        double level = u(rng);
        for (auto& v : f) {
            if (rng() % 6 == 0) level = rng() % 3 == 0 ? kInf : u(rng);
            v = level;
        }
        return f;
    };
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = 8 + rng() % 121;
        auto f = random_scan(n);
        std::vector<char> mask(n);
        for (std::size_t j = 0; j < n; ++j) mask[j] = f[j] <= m;
        const int k = oracle_components(mask);
        auto ex = UncertaintySet::exact(f);
        if (monitor_see(ex, k, m) != Verdict::Holds) r.fail(fmt::format("scan {}: count {} not accepted", t, k));
        if (monitor_see(ex, k + 1, m) != Verdict::Fails) r.fail(fmt::format("scan {}: count {} accepted", t, k + 1));
        if (k > 0 && monitor_see(ex, k - 1, m) != Verdict::Fails) r.fail(fmt::format("scan {}: count {} accepted", t, k - 1));
    }
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = 8 + rng() % 57;
        auto f = random_scan(n);
        auto big = UncertaintySet::around(f, 0.5 + u(rng) / 5);
        std::vector<double> lo(n), hi(n);
        for (std::size_t j = 0; j < n; ++j) {
            if (std::isinf(big.lo(j))) {
                lo[j] = hi[j] = kInf;
                continue;
            }
            std::uniform_real_distribution<double> in(big.lo(j), big.hi(j));
            double a = in(rng), b = in(rng);
            lo[j] = std::min(a, b);
            hi[j] = rng() % 4 == 0 ? lo[j] : std::max(a, b);
        }
        auto sub = restrict(big, UncertaintySet(lo, hi));
        for (int k = 0; k < 8; ++k) {
            auto v = monitor_see(big, k, m);
            if (v != Verdict::Indeterminate && monitor_see(sub, k, m) != v)
                r.fail(fmt::format("pair {}: See({}) not monotone", t, k));
        }
        if (monitor_safe(big, 0.5).verdict == Verdict::Holds && monitor_safe(sub, 0.5).verdict != Verdict::Holds)
            r.fail(fmt::format("pair {}: Safe not monotone", t));
    }
    if (r.ok) r.detail = "1000 scans, 1000 restriction pairs";
    return r;
}

bool world_hypotheses(const nav::World& w, double R, std::string& why) {
    const double need = 2 * R + 0.2;
    if (w.obstacles.size() < 3 || w.obstacles.size() > 6) why = "obstacle count";
    for (std::size_t i = 0; i < w.obstacles.size(); ++i) {
        const auto& a = w.obstacles[i];
        if (a.radius < 0.5 || a.radius > 1.5) why = "radius";
        if ((w.start - a.center).norm() - a.radius <= need) why = "start clearance";
        if ((w.goal - a.center).norm() - a.radius <= need) why = "goal clearance";
        for (std::size_t j = i + 1; j < w.obstacles.size(); ++j) {
            const auto& b = w.obstacles[j];
            if ((a.center - b.center).norm() - a.radius - b.radius <= need) why = "pairwise gap";
        }
    }
    return why.empty();
}

Result main_theorem() {
    Result r;
    auto t0 = Clock::now();
    nav::NavParams p;
    p.safety_radius = 0.5;
    p.goal_tolerance = 0.05;
    p.max_steps = 100000;
    std::vector<std::uint64_t> seeds(50);
    for (std::uint64_t s = 0; s < 50; ++s) seeds[s] = s;
    auto batch = nav::run_batch(seeds, p);
    int success = 0;
    for (const auto& item : batch) {
        std::string why;
        if (!world_hypotheses(item.world, p.safety_radius, why)) r.fail(fmt::format("seed {}: {}", item.seed, why));
        const auto& res = item.result;
        bool ok = res.outcome.kind == nav::OutcomeKind::AtGoal &&
                  static_cast<long>(res.trace.steps.size()) <= p.max_steps;
        for (const auto& s : res.trace.steps) {
            if (!(nav::clearance(item.world, s.x) > p.safety_radius)) ok = false;
            if (s.safe != sem::Verdict::Holds) ok = false;
        }
        if (!ok) r.fail(fmt::format("seed {}: {} ", item.seed, nav::to_string(res.outcome.kind)));
        success += ok;
    }
    const double dt = seconds_since(t0);
    if (dt >= 60.0) r.fail(fmt::format("took {:.2f} s", dt));
    if (r.ok) r.detail = fmt::format("{}/50 AtGoal with clearance > R throughout, {:.2f} s", success, dt);
    return r;
}

Result violation_channel() {
    Result r;
    nav::NavParams p;
    std::vector<std::uint64_t> seeds(10);
    for (std::uint64_t s = 0; s < 10; ++s) seeds[s] = s;
    auto batch = nav::run_batch(seeds, p, true);
    for (const auto& item : batch) {
        const auto& o = item.result.outcome;
        if (o.kind != nav::OutcomeKind::SeparationViolation) {
            r.fail(fmt::format("seed {}: {}", item.seed, nav::to_string(o.kind)));
            continue;
        }
        const auto& obs = item.world.obstacles;
        const int n = static_cast<int>(obs.size());
        if (o.world_i < 0 || o.world_j < 0 || o.world_i >= n || o.world_j >= n || o.world_i == o.world_j) {
            r.fail(fmt::format("seed {}: reported pair does not match world obstacles", item.seed));
            continue;
        }
        const auto& a = obs[o.world_i];
        const auto& b = obs[o.world_j];
        if ((a.center - b.center).norm() - a.radius - b.radius > 2 * p.safety_radius)
            r.fail(fmt::format("seed {}: reported pair is not violating", item.seed));
        for (const auto& s : item.result.trace.steps)
            if (s.safe != sem::Verdict::Holds) r.fail(fmt::format("seed {}: Safe fails at step {}", item.seed, s.step));
    }
    if (r.ok) r.detail = "10/10 violation worlds report a genuine pair";
    return r;
}

Result geometry() {
    Result r;
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-6, 6), w01(0, 1);
    nav::NavParams p;
    int instances = 0;
    for (int t = 0; t < 50; ++t) {
        std::vector<nav::Point> nearest;
        const int k = 1 + static_cast<int>(rng() % 4);
        while (static_cast<int>(nearest.size()) < k) {
            nav::Point q(u(rng), u(rng));
            if (q.norm() > 2.0) nearest.push_back(q);
        }
        nav::Polygon poly;
        try {
            poly = nav::local_free_space(nav::Point::Zero(), nearest, p);
        } catch (const nav::EmptyPolygon&) {
            continue;
        }
        ++instances;
        nav::Point g(2 * u(rng), 2 * u(rng));
        nav::Point q = nav::project_goal(poly, g);
        if (!nav::contains(poly, q, 1e-9)) r.fail(fmt::format("instance {}: projection outside", t));
        for (int s = 0; s < 1000; ++s) {
            // Random convex combination of the vertices.
            nav::Point z = nav::Point::Zero();
            double total = 0;
            for (const auto& v : poly) {
                double c = -std::log(w01(rng) + 1e-300);
                z += c * v;
                total += c;
            }
            z /= total;
            if ((q - g).norm() > (z - g).norm() + 1e-9) r.fail(fmt::format("instance {}: sample beats projection", t));
        }
    }

    auto d = sem::denote(syntax::parse_type("At(pt(1.25, -0.5))"));
    const auto& mode = d.system.modes[0];
    const hybrid::Vec goal = (hybrid::Vec(2) << 1.25, -0.5).finished();
    for (int t = 0; t < 100; ++t) {
        hybrid::Vec x(2);
        x << u(rng), u(rng);
        const double h = 1e-4;
        for (int i = 0; i < 2; ++i) {
            hybrid::Vec a = x, b = x;
            a(i) += h;
            b(i) -= h;
            const double fd = -((a - goal).squaredNorm() - (b - goal).squaredNorm()) / (2 * h);
            if (std::abs(mode.flow(x)(i) - fd) > 1e-6) r.fail(fmt::format("At field at point {}", t));
        }
    }

    nav::NavParams sp;
    sp.rays = 72;
    Eigen::Rotation2Dd rot(2 * std::numbers::pi / sp.rays);
    for (int t = 0; t < 20; ++t) {
        nav::World w;
        while (w.obstacles.size() < 4) {
            nav::Disk o{nav::Point(u(rng), u(rng)), 0.3 + w01(rng)};
            if (o.center.norm() > o.radius + 0.1) w.obstacles.push_back(o);
        }
        nav::World wr = w;
        for (auto& o : wr.obstacles) o.center = rot * o.center;
        auto s = nav::sense(w, nav::Point::Zero(), sp);
        auto sr = nav::sense(wr, nav::Point::Zero(), sp);
        for (int j = 0; j < sp.rays; ++j) {
            const double a = s[j], b = sr[(j + 1) % sp.rays];
            if (std::isinf(a) != std::isinf(b) || (!std::isinf(a) && std::abs(a - b) > 1e-9))
                r.fail(fmt::format("world {}: ray {} not equivariant", t, j));
        }
    }
    if (r.ok) r.detail = fmt::format("{} projection instances, 100 field points, 20 rotated scans", instances);
    return r;
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Result()>>> criteria{
        {"typechecker corpus and injected faults", typechecker_corpus},
        {"semiring and usage laws", semiring_laws},
        {"LTL golden suite and controller type", ltl_golden},
        {"hybrid composition laws", hybrid_algebra},
        {"monitor oracle equivalence and monotonicity", monitor_oracle},
        {"navigation reaches the goal safely", main_theorem},
        {"separation violations are reported", violation_channel},
        {"geometry checks", geometry},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Result r;
        try {
            r = criteria[i].second();
        } catch (const std::exception& e) {
            r.fail(std::string("exception: ") + e.what());
        }
        fmt::print("criterion {}: {} ({}): {}\n", i + 1, r.ok ? "PASS" : "FAIL", criteria[i].first, r.detail);
        failed += !r.ok;
    }
    return failed ? 1 : 0;
}
