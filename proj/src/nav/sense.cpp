#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "hydranav/nav.hpp"

namespace hydranav::nav {

void NavParams::validate() const {
    if (!(safety_radius > 0)) throw NavError("safety_radius must be positive");
    if (!(sensor_range > 0)) throw NavError("sensor_range must be positive");
    if (rays < 3) throw NavError("at least three rays are needed");
    if (!(goal_tolerance > 0)) throw NavError("goal_tolerance must be positive");
    if (!(gain > 0) || !(dt > 0) || gain * dt > 1.0) throw NavError("need gain > 0, dt > 0 and gain * dt <= 1");
    if (max_steps < 1) throw NavError("max_steps must be at least 1");
    if (!(noise >= 0)) throw NavError("noise must be non-negative");
}

Point ray_direction(int j, int rays) {
    const double a = 2.0 * std::numbers::pi * j / rays;
    return {std::cos(a), std::sin(a)};
}

namespace {

// Distance along unit ray d from x to disk, +inf when missed.
double ray_disk(const Point& x, const Point& d, const Disk& o) {
    const Point w = x - o.center;
    const double b = d.dot(w);
    const double c = w.squaredNorm() - o.radius * o.radius;
    const double disc = b * b - c;
    if (disc < 0) return sem::kInf;
    const double t = -b - std::sqrt(disc);
    if (t >= 0) return t;
    return sem::kInf;
}

void check_outside(const World& world, const Point& x) {
    for (std::size_t i = 0; i < world.obstacles.size(); ++i) {
        const auto& o = world.obstacles[i];
        if ((x - o.center).norm() < o.radius)
            throw InsideObstacle(fmt::format("position ({}, {}) is inside obstacle {}", x.x(), x.y(), i));
    }
}

double reading(const World& world, const Point& x, const Point& d, double range) {
    double best = sem::kInf;
    for (const auto& o : world.obstacles) best = std::min(best, ray_disk(x, d, o));
    return best <= range ? best : sem::kInf;
}

} // namespace

Scan sense(const World& world, const Point& x, const NavParams& params) {
    check_outside(world, x);
    Scan s(static_cast<std::size_t>(params.rays));
    for (int j = 0; j < params.rays; ++j) s[j] = reading(world, x, ray_direction(j, params.rays), params.sensor_range);
    return s;
}

Scan sense_parallel(const World& world, const Point& x, const NavParams& params) {
    check_outside(world, x);
    Scan s(static_cast<std::size_t>(params.rays));
    const int n = params.rays;
#pragma omp parallel for schedule(static)
    for (int j = 0; j < n; ++j) s[j] = reading(world, x, ray_direction(j, n), params.sensor_range);
    return s;
}

Components detect_components(const Scan& scan, double m) {
    Components c;
    const int n = static_cast<int>(scan.size());
    int clear = -1;
    for (int j = 0; j < n; ++j)
        if (!(scan[j] <= m)) {
            clear = j;
            break;
        }
    if (clear < 0) {
        if (n > 0) c.arcs.push_back({0, n});
    } else {
        for (int k = 1; k <= n; ++k) {
            int j = (clear + k) % n;
            bool in = scan[j] <= m;
            bool prev_in = scan[(j + n - 1) % n] <= m;
            if (in && !prev_in) c.arcs.push_back({j, 1});
            else if (in) ++c.arcs.back().length;
        }
    }
    c.n = static_cast<int>(c.arcs.size());
    return c;
}

Point hit_point(const Scan& scan, int ray, const Point& x) {
    return x + scan[ray] * ray_direction(ray, static_cast<int>(scan.size()));
}

std::optional<Disk> circumcircle(const Point& a, const Point& b, const Point& c) {
    const Point ab = b - a, ac = c - a;
    const double cross = ab.x() * ac.y() - ab.y() * ac.x();
    const double scale = std::max({ab.squaredNorm(), ac.squaredNorm(), 1e-300});
    if (std::abs(cross) <= 1e-12 * scale) return std::nullopt;
    const double d = 2.0 * cross;
    const double b2 = ab.squaredNorm(), c2 = ac.squaredNorm();
    Point u((ac.y() * b2 - ab.y() * c2) / d, (ab.x() * c2 - ac.x() * b2) / d);
    return Disk{a + u, u.norm()};
}

std::vector<Disk> estimate_obstacles(const Scan& scan, const std::vector<Arc>& arcs, const Point& x) {
    const int n = static_cast<int>(scan.size());
    std::vector<Disk> out;
    for (const auto& arc : arcs) {
        int nearest = arc.ray(0, n);
        for (int i = 1; i < arc.length; ++i)
            if (scan[arc.ray(i, n)] < scan[nearest]) nearest = arc.ray(i, n);
        Disk point{hit_point(scan, nearest, x), 0.0};
        if (arc.length < 3) {
            out.push_back(point);
            continue;
        }
        auto c = circumcircle(hit_point(scan, arc.ray(0, n), x), hit_point(scan, arc.ray(arc.length / 2, n), x),
                              hit_point(scan, arc.ray(arc.length - 1, n), x));
        out.push_back(c ? *c : point);
    }
    return out;
}

} // namespace hydranav::nav
