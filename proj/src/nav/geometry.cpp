#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "hydranav/nav.hpp"

namespace hydranav::nav {

namespace {

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

Point closest_on_segment(const Point& a, const Point& b, const Point& q) {
    const Point ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 == 0) return a;
    const double t = std::clamp((q - a).dot(ab) / len2, 0.0, 1.0);
    return a + t * ab;
}

} // namespace

Polygon clip(const Polygon& poly, const Point& normal, double offset) {
    Polygon out;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point& a = poly[i];
        const Point& b = poly[(i + 1) % n];
        const double fa = normal.dot(a) - offset, fb = normal.dot(b) - offset;
        if (fa <= 0) out.push_back(a);
        if ((fa < 0 && fb > 0) || (fa > 0 && fb < 0)) out.push_back(a + (fa / (fa - fb)) * (b - a));
    }
    Polygon dedup;
    for (const auto& p : out)
        if (dedup.empty() || (p - dedup.back()).norm() > 1e-14) dedup.push_back(p);
    while (dedup.size() > 1 && (dedup.front() - dedup.back()).norm() <= 1e-14) dedup.pop_back();
    return dedup;
}

double area(const Polygon& poly) {
    double a = 0;
    for (std::size_t i = 0; i < poly.size(); ++i) a += cross(poly[i], poly[(i + 1) % poly.size()]);
    return 0.5 * a;
}

bool contains(const Polygon& poly, const Point& q, double tol) {
    if (poly.size() < 3) return false;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point& a = poly[i];
        const Point& b = poly[(i + 1) % poly.size()];
        if (cross(b - a, q - a) < -tol * (1.0 + (b - a).norm())) return false;
    }
    return true;
}

Polygon local_free_space(const Point& x, const std::vector<Point>& nearest, const NavParams& params,
                         std::optional<Point> heading) {
    constexpr int kSides = 32;
    double theta0 = 0;
    if (heading && (*heading - x).norm() > 0) theta0 = std::atan2(heading->y() - x.y(), heading->x() - x.x());
    const double rho = params.sensor_range / 2.0;
    Polygon poly;
    for (int k = 0; k < kSides; ++k) {
        const double a = theta0 + 2.0 * std::numbers::pi * k / kSides;
        poly.push_back(x + rho * Point(std::cos(a), std::sin(a)));
    }
    const double pull =
        params.free_space_rule == FreeSpaceRule::PointBisector ? params.safety_radius : params.safety_radius / 2.0;
    for (const auto& p : nearest) {
        const double d = (p - x).norm();
        if (d == 0) throw EmptyPolygon(fmt::format("obstacle point coincides with the robot at ({}, {})", x.x(), x.y()));
        const Point u = (p - x) / d;
        const Point mid = 0.5 * (x + p) - pull * u;
        poly = clip(poly, u, u.dot(mid));
        if (poly.size() < 3) break;
    }
    if (poly.size() < 3 || area(poly) <= 1e-18)
        throw EmptyPolygon(fmt::format("local free space at ({}, {}) is empty", x.x(), x.y()));
    return poly;
}

Point project_goal(const Polygon& poly, const Point& g) {
    if (poly.size() < 3) throw EmptyPolygon("cannot project onto an empty polygon");
    if (contains(poly, g, 0.0)) return g;
    Point best = poly[0];
    double best_d = sem::kInf;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        Point c = closest_on_segment(poly[i], poly[(i + 1) % poly.size()], g);
        double d = (c - g).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

Point step_dynamics(const Point& x, const Point& target, const NavParams& params) {
    return x + params.dt * params.gain * (target - x);
}

std::optional<std::pair<int, int>> separation_check(const std::vector<Disk>& obstacles, double R) {
    for (std::size_t i = 0; i < obstacles.size(); ++i)
        for (std::size_t j = i + 1; j < obstacles.size(); ++j) {
            const double gap =
                (obstacles[i].center - obstacles[j].center).norm() - obstacles[i].radius - obstacles[j].radius;
            if (gap <= 2.0 * R) return std::make_pair(static_cast<int>(i), static_cast<int>(j));
        }
    return std::nullopt;
}

double clearance(const World& world, const Point& x) {
    double c = sem::kInf;
    for (const auto& o : world.obstacles) c = std::min(c, (x - o.center).norm() - o.radius);
    return c;
}

} // namespace hydranav::nav
