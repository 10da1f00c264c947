#include <numbers>
#include <random>

#include <doctest.h>

#include "common.hpp"
#include "hydranav/nav.hpp"

using namespace hydranav;
using namespace hydranav::nav;

namespace {

// First contact along a ray by fixed-step marching then bisection; no closed form.
double marched_reading(const World& w, const Point& x, const Point& d, double range) {
    auto inside = [&](double t) {
        for (const auto& o : w.obstacles)
            if ((x + t * d - o.center).norm() <= o.radius) return true;
        return false;
    };
    const double h = 1e-3;
    for (double t = 0; t <= range + h; t += h) {
        if (!inside(t)) continue;
        double lo = std::max(0.0, t - h), hi = t;
        for (int k = 0; k < 60; ++k) {
            double mid = 0.5 * (lo + hi);
            (inside(mid) ? hi : lo) = mid;
        }
        return hi <= range ? hi : sem::kInf;
    }
    return sem::kInf;
}

World random_world(std::mt19937& rng) {
    std::uniform_real_distribution<double> c(-6, 6), r(0.3, 1.5);
    World w;
    while (w.obstacles.size() < 5) {
        Disk d{Point(c(rng), c(rng)), r(rng)};
        if (d.center.norm() > d.radius + 0.2) w.obstacles.push_back(d);
    }
    return w;
}

double max_along(const Polygon& p, const Point& dir) {
    double best = -1e300;
    for (const auto& v : p) best = std::max(best, v.dot(dir));
    return best;
}

NavParams fixture_params(const std::string& name, NavParams base = {}) {
    return load_params(source_path("tests/fixtures/worlds/" + name), base);
}

World fixture_world(const std::string& name) { return load_world(source_path("tests/fixtures/worlds/" + name)); }

} // namespace

TEST_CASE("sensing matches a marched ray oracle") {
    std::mt19937 rng(4);
    NavParams p;
    p.rays = 48;
    for (int t = 0; t < 10; ++t) {
        auto w = random_world(rng);
        auto s = sense(w, Point::Zero(), p);
        for (int j = 0; j < p.rays; ++j) {
            double want = marched_reading(w, Point::Zero(), ray_direction(j, p.rays), p.sensor_range);
            if (std::isinf(want)) {
                // Grazing rays may differ by the marching step.
                if (!std::isinf(s[j])) CHECK(s[j] > p.sensor_range - 1e-2);
            } else {
                CHECK(s[j] == doctest::Approx(want).epsilon(1e-6));
            }
        }
        CHECK(sense_parallel(w, Point::Zero(), p) == s);
    }
}

TEST_CASE("sensing is equivariant under rotation by one ray") {
    std::mt19937 rng(6);
    NavParams p;
    p.rays = 36;
    const double a = 2 * std::numbers::pi / p.rays;
    Eigen::Rotation2Dd rot(a);
    for (int t = 0; t < 5; ++t) {
        auto w = random_world(rng);
        World r = w;
        for (auto& o : r.obstacles) o.center = rot * o.center;
        auto s = sense(w, Point::Zero(), p);
        auto sr = sense(r, Point::Zero(), p);
        for (int j = 0; j < p.rays; ++j) {
            if (std::isinf(s[j])) CHECK(std::isinf(sr[(j + 1) % p.rays]));
            else CHECK(sr[(j + 1) % p.rays] == doctest::Approx(s[j]).epsilon(1e-9));
        }
    }
}

TEST_CASE("sensing from inside an obstacle throws") {
    World w;
    w.obstacles.push_back({Point(0.2, 0), 1.0});
    CHECK_THROWS_AS(sense(w, Point::Zero(), NavParams{}), InsideObstacle);
    CHECK_THROWS_AS(sense_parallel(w, Point::Zero(), NavParams{}), InsideObstacle);
}

TEST_CASE("components agree with the circular run count") {
    std::mt19937 rng(12);
    std::uniform_real_distribution<double> u(0, 8);
    for (int t = 0; t < 500; ++t) {
        Scan s(1 + rng() % 20);
        for (auto& v : s) v = rng() % 3 == 0 ? sem::kInf : u(rng);
        std::vector<char> mask(s.size());
        for (std::size_t j = 0; j < s.size(); ++j) mask[j] = s[j] <= 5.0;
        auto c = detect_components(s, 5.0);
        CHECK(c.n == sem::circular_components(mask));
        CHECK(c.arcs.size() == static_cast<std::size_t>(c.n));
        int covered = 0;
        for (const auto& a : c.arcs) {
            covered += a.length;
            for (int i = 0; i < a.length; ++i) CHECK(mask[a.ray(i, static_cast<int>(s.size()))]);
        }
        CHECK(covered == std::count(mask.begin(), mask.end(), 1));
    }
}

TEST_CASE("circle estimates recover a disk") {
    World w;
    w.obstacles.push_back({Point(3, 1), 1.2});
    NavParams p;
    auto s = sense(w, Point::Zero(), p);
    auto c = detect_components(s, p.sensor_range);
    REQUIRE(c.n == 1);
    auto est = estimate_obstacles(s, c.arcs, Point::Zero());
    REQUIRE(est.size() == 1);
    CHECK(est[0].center.x() == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(est[0].center.y() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(est[0].radius == doctest::Approx(1.2).epsilon(1e-9));
}

TEST_CASE("short arcs give a point obstacle at the nearest hit") {
    Scan s(16, sem::kInf);
    s[3] = 2.0;
    s[4] = 1.5;
    Components c = detect_components(s, 5.0);
    auto est = estimate_obstacles(s, c.arcs, Point(1, 1));
    REQUIRE(est.size() == 1);
    CHECK(est[0].radius == 0.0);
    CHECK((est[0].center - hit_point(s, 4, Point(1, 1))).norm() < 1e-12);
    CHECK(!circumcircle(Point(0, 0), Point(1, 1), Point(2, 2)));
    auto cc = circumcircle(Point(1, 0), Point(0, 1), Point(-1, 0));
    REQUIRE(cc);
    CHECK(cc->center.norm() < 1e-12);
    CHECK(cc->radius == doctest::Approx(1.0));
}

TEST_CASE("perception keeps circles and loose hits apart") {
    World w;
    w.obstacles.push_back({Point(3, 0), 1.0});
    w.obstacles.push_back({Point(-3, 0.5), 0.8});
    NavParams p;
    auto per = perceive(sense(w, Point::Zero(), p), Point::Zero(), p);
    CHECK(per.components.n == 2);
    CHECK(per.circles.size() == 2);
    for (const auto& d : per.circles) {
        double best = 1e9;
        for (const auto& o : w.obstacles) best = std::min(best, (d.center - o.center).norm() + std::abs(d.radius - o.radius));
        CHECK(best < 1e-6);
    }
}

TEST_CASE("local free space: half-plane offsets for both rules") {
    NavParams p;
    p.safety_radius = 0.5;
    p.sensor_range = 5.0;
    std::vector<Point> nearest{Point(4, 0)};
    p.free_space_rule = FreeSpaceRule::PointBisector;
    auto pt = local_free_space(Point::Zero(), nearest, p);
    CHECK(max_along(pt, Point(1, 0)) == doctest::Approx(1.5));
    p.free_space_rule = FreeSpaceRule::BodyBisector;
    auto body = local_free_space(Point::Zero(), nearest, p);
    CHECK(max_along(body, Point(1, 0)) == doctest::Approx(1.75));
    CHECK(max_along(body, Point(-1, 0)) == doctest::Approx(2.5).epsilon(0.02));
    CHECK(area(body) < area(local_free_space(Point::Zero(), {}, p)));
    CHECK(contains(body, Point::Zero()));

    auto oriented = local_free_space(Point::Zero(), {}, p, Point(0, 1));
    CHECK((oriented[0] - Point(0, 2.5)).norm() < 1e-12);
}

TEST_CASE("local free space can be empty") {
    NavParams p;
    p.free_space_rule = FreeSpaceRule::PointBisector;
    std::vector<Point> ring;
    for (int k = 0; k < 6; ++k) ring.push_back(0.9 * ray_direction(k, 6));
    CHECK_THROWS_AS(local_free_space(Point::Zero(), ring, p), EmptyPolygon);
}

TEST_CASE("clipping keeps the requested side") {
    Polygon sq{Point(0, 0), Point(2, 0), Point(2, 2), Point(0, 2)};
    auto half = clip(sq, Point(1, 0), 1.0);
    CHECK(area(half) == doctest::Approx(2.0));
    CHECK(contains(half, Point(0.5, 1)));
    CHECK(!contains(half, Point(1.5, 1)));
}

TEST_CASE("goal projection is the closest point of the polygon") {
    NavParams p;
    auto poly = local_free_space(Point::Zero(), {Point(3, 1), Point(-1, 3)}, p);
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> u(-6, 6);
    for (int t = 0; t < 30; ++t) {
        Point g(u(rng), u(rng));
        Point q = project_goal(poly, g);
        CHECK(contains(poly, q, 1e-9));
        double best = 1e300;
        for (double a = -3; a <= 3; a += 0.02)
            for (double b = -3; b <= 3; b += 0.02)
                if (contains(poly, Point(a, b))) best = std::min(best, (Point(a, b) - g).norm());
        CHECK((q - g).norm() <= best + 1e-9);
        CHECK((q - g).norm() >= best - 0.03);
    }
    CHECK(project_goal(poly, Point(0.1, 0.1)) == Point(0.1, 0.1));
}

TEST_CASE("dynamics and separation check") {
    NavParams p;
    Point x = step_dynamics(Point(0, 0), Point(1, 0), p);
    CHECK(x.x() == doctest::Approx(p.dt * p.gain));
    std::vector<Disk> d{{Point(0, 0), 1}, {Point(5, 0), 1}, {Point(0, 2.9), 1}, {Point(5, 2.5), 1}};
    auto s = separation_check(d, 0.5);
    REQUIRE(s);
    CHECK(*s == std::make_pair(0, 2));
    CHECK(!separation_check({{Point(0, 0), 1}, {Point(3.1, 0), 1}}, 0.5));
    CHECK(separation_check({{Point(0, 0), 1}, {Point(3.0, 0), 1}}, 0.5));
}

TEST_CASE("session registry enforces linear use") {
    SessionRegistry r;
    int h = r.open();
    CHECK_NOTHROW(r.use(h));
    CHECK_THROWS_AS(r.finish(), HandleLeak);
    r.close(h);
    CHECK_THROWS_AS(r.use(h), HandleReuse);
    CHECK_THROWS_AS(r.close(h), HandleReuse);
    CHECK_THROWS_AS(r.use(7), HandleReuse);
    CHECK_NOTHROW(r.finish());
    CHECK(r.opened() == 1);
    CHECK(r.closed() == 1);
}

TEST_CASE("controller in an empty world approaches the goal monotonically") {
    World w;
    w.goal = Point(6, 0);
    SessionRegistry reg;
    auto r = run_controller(w, Point::Zero(), w.goal, NavParams{}, &reg);
    CHECK(r.outcome.kind == OutcomeKind::AtGoal);
    for (std::size_t k = 1; k < r.trace.steps.size(); ++k)
        CHECK((r.trace.steps[k].x - w.goal).norm() <= (r.trace.steps[k - 1].x - w.goal).norm() + 1e-12);
    CHECK(r.trace.steps.back().at == sem::Verdict::Holds);
    CHECK(reg.opened() == 1);
    CHECK(reg.closed() == 1);
    CHECK_NOTHROW(reg.finish());
}

TEST_CASE("controller traces are consistent with their scans") {
    auto w = fixture_world("two_disks.yaml");
    NavParams p;
    p.keep_scans = true;
    auto r = run_controller(w, w.start, w.goal, p);
    CHECK(r.outcome.kind == OutcomeKind::AtGoal);
    int prev = -1;
    for (const auto& s : r.trace.steps) {
        REQUIRE(s.scan.size() == static_cast<std::size_t>(p.rays));
        CHECK(s.n_visible == detect_components(s.scan, p.sensor_range).n);
        CHECK(s.min_clearance == doctest::Approx(clearance(w, s.x)));
        CHECK(s.min_clearance > p.safety_radius);
        CHECK(s.safe == sem::Verdict::Holds);
        CHECK(s.see == sem::Verdict::Holds);
        if (prev >= 0) CHECK((s.event == Event::NewObs) == (s.n_visible > prev));
        if (prev >= 0) CHECK((s.event == Event::LoseObs) == (s.n_visible < prev));
        prev = s.n_visible;
    }
    CHECK(r.sessions_opened == r.sessions_closed);
}

TEST_CASE("controller runs are deterministic") {
    auto w = fixture_world("two_disks.yaml");
    auto a = run_controller(w, w.start, w.goal, NavParams{});
    auto b = run_controller(w, w.start, w.goal, NavParams{});
    REQUIRE(a.trace.steps.size() == b.trace.steps.size());
    for (std::size_t k = 0; k < a.trace.steps.size(); ++k) CHECK(a.trace.steps[k].x == b.trace.steps[k].x);
}

TEST_CASE("narrow gap: body rule passes, point rule stalls") {
    auto w = fixture_world("narrow_gap.yaml");
    auto body = run_controller(w, w.start, w.goal, NavParams{});
    CHECK(body.outcome.kind == OutcomeKind::AtGoal);
    auto p = fixture_params("point_rule.yaml");
    CHECK(p.free_space_rule == FreeSpaceRule::PointBisector);
    auto point = run_controller(w, w.start, w.goal, p);
    CHECK(point.outcome.kind == OutcomeKind::Timeout);
    CHECK(point.trace.steps.back().x.x() < 10.0);
}

TEST_CASE("start clearance hypothesis") {
    auto w = fixture_world("close_start.yaml");
    CHECK_THROWS_AS(run_controller(w, w.start, w.goal, NavParams{}), NavError);
    NavParams p;
    p.allow_close_start = true;
    auto r = run_controller(w, w.start, w.goal, p);
    CHECK(r.trace.warnings.size() == 1);
}

TEST_CASE("generated worlds satisfy their hypotheses") {
    GeneratorParams gp;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        auto w = generate_world(seed, gp);
        CHECK(w.obstacles.size() >= 3);
        CHECK(w.obstacles.size() <= 6);
        CHECK(!separation_check(w.obstacles, gp.safety_radius + gp.margin / 2));
        CHECK(clearance(w, w.start) > 2 * gp.safety_radius);
        CHECK(clearance(w, w.goal) > gp.safety_radius);
        CHECK(dump_world(generate_world(seed, gp)) == dump_world(w));

        auto v = generate_violation_world(seed, gp);
        CHECK(separation_check(v.obstacles, gp.safety_radius));
    }
}

TEST_CASE("batch results do not depend on parallelism") {
    std::vector<std::uint64_t> seeds{1, 2, 3, 4};
    auto a = run_batch(seeds, NavParams{}, false, true);
    auto b = run_batch(seeds, NavParams{}, false, false);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].result.outcome.kind == b[i].result.outcome.kind);
        CHECK(a[i].result.trace.steps.size() == b[i].result.trace.steps.size());
    }
}

TEST_CASE("world YAML round trip and rejection of bad input") {
    auto w = generate_world(11);
    auto back = parse_world(dump_world(w));
    REQUIRE(back.obstacles.size() == w.obstacles.size());
    for (std::size_t i = 0; i < w.obstacles.size(); ++i) {
        CHECK((back.obstacles[i].center - w.obstacles[i].center).norm() < 1e-12);
        CHECK(back.obstacles[i].radius == w.obstacles[i].radius);
    }
    CHECK(back.start == w.start);
    CHECK(back.goal == w.goal);
    CHECK_THROWS_AS(parse_world("start: [1]\n"), NavError);
    CHECK_THROWS_AS(load_params(source_path("tests/fixtures/worlds/empty.yaml"), NavParams{}), NavError);
}

TEST_CASE("CSV traces and parameter lines round trip") {
    auto w = fixture_world("two_disks.yaml");
    NavParams p;
    p.noise = 0.01;
    auto r = run_controller(w, w.start, w.goal, p);
    auto csv = read_trace_csv(trace_csv(r, {"params: " + params_line(p)}));
    REQUIRE(csv.positions.size() == r.trace.steps.size());
    for (std::size_t k = 0; k < csv.positions.size(); ++k) CHECK((csv.positions[k] - r.trace.steps[k].x).norm() < 1e-8);
    auto q = parse_params_line(params_line(p));
    CHECK(q.noise == p.noise);
    CHECK(q.rays == p.rays);
    CHECK(q.free_space_rule == p.free_space_rule);
}

TEST_CASE("SVG has one path per trajectory") {
    auto w = fixture_world("two_disks.yaml");
    std::vector<std::vector<Point>> paths{{w.start, w.goal}, {w.start, Point(5, 5), w.goal}};
    auto svg = plot_svg(w, paths, local_free_space(w.goal, {}, NavParams{}));
    std::size_t count = 0;
    for (std::size_t at = svg.find("<path"); at != std::string::npos; at = svg.find("<path", at + 1)) ++count;
    CHECK(count == 2);
    CHECK(svg.find("<polygon") != std::string::npos);
    CHECK(svg.find("<circle") != std::string::npos);
}
