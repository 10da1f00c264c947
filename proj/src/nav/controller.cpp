#include <cmath>

#include <fmt/format.h>

#include "hydranav/nav.hpp"

namespace hydranav::nav {

int SessionRegistry::open() {
    open_.push_back(1);
    ++opened_;
    return static_cast<int>(open_.size()) - 1;
}

void SessionRegistry::use(int handle) const {
    if (handle < 0 || handle >= static_cast<int>(open_.size()))
        throw HandleReuse(fmt::format("sensor handle {} was never opened", handle));
    if (!open_[handle]) throw HandleReuse(fmt::format("sensor handle {} used after stopSensing", handle));
}

void SessionRegistry::close(int handle) {
    use(handle);
    open_[handle] = 0;
    ++closed_;
}

void SessionRegistry::finish() const {
    for (std::size_t h = 0; h < open_.size(); ++h)
        if (open_[h]) throw HandleLeak(fmt::format("sensor handle {} was never closed", h));
}

std::string_view to_string(OutcomeKind k) {
    switch (k) {
    case OutcomeKind::AtGoal: return "AtGoal";
    case OutcomeKind::SeparationViolation: return "SeparationViolation";
    case OutcomeKind::Timeout: return "Timeout";
    case OutcomeKind::Halted: return "Halted";
    }
    return "?";
}

std::string_view to_string(Event e) {
    switch (e) {
    case Event::None: return "";
    case Event::NewObs: return "NewObs";
    case Event::LoseObs: return "LoseObs";
    }
    return "?";
}

namespace {

double fit_tol(double radius) { return 1e-6 * (1.0 + radius); }

bool on_circle(const Disk& c, const Point& p) { return std::abs((p - c.center).norm() - c.radius) <= fit_tol(c.radius); }

bool same_disk(const Disk& a, const Disk& b) {
    const double tol = 10 * fit_tol(std::max(a.radius, b.radius));
    return (a.center - b.center).norm() <= tol && std::abs(a.radius - b.radius) <= tol;
}

int match_world(const World& w, const Disk& d) {
    int best = -1;
    double best_err = 1e-4 * (1.0 + d.radius);
    for (std::size_t i = 0; i < w.obstacles.size(); ++i) {
        const auto& o = w.obstacles[i];
        double err = (o.center - d.center).norm() + std::abs(o.radius - d.radius);
        if (err <= best_err) {
            best_err = err;
            best = static_cast<int>(i);
        }
    }
    return best;
}

} // namespace

Perception perceive(const Scan& scan, const Point& x, const NavParams& params) {
    Perception out;
    out.components = detect_components(scan, params.sensor_range);
    const int n = static_cast<int>(scan.size());
    for (const auto& arc : out.components.arcs) {
        std::vector<Point> pts;
        for (int i = 0; i < arc.length; ++i) pts.push_back(hit_point(scan, arc.ray(i, n), x));
        const int k = static_cast<int>(pts.size());
        int i = 0;
        // Greedy split into runs lying on one circle; a seed triple counts only when
        // a fourth hit confirms it.
        while (i < k) {
            if (k - i >= 4) {
                auto c = circumcircle(pts[i], pts[i + 1], pts[i + 2]);
                if (c && on_circle(*c, pts[i + 3])) {
                    int j = i + 4;
                    while (j < k && on_circle(*c, pts[j])) ++j;
                    Disk fit = *c;
                    if (auto wide = circumcircle(pts[i], pts[(i + j - 1) / 2], pts[j - 1])) {
                        bool ok = true;
                        for (int t = i; t < j && ok; ++t) ok = on_circle(*wide, pts[t]);
                        if (ok) fit = *wide;
                    }
                    bool dup = false;
                    for (const auto& e : out.circles) dup = dup || same_disk(e, fit);
                    if (!dup) out.circles.push_back(fit);
                    i = j;
                    continue;
                }
            }
            out.loose_hits.push_back(pts[i]);
            ++i;
        }
    }
    return out;
}

RunResult run_controller(const World& world, const Point& x0, const Point& g, const NavParams& params,
                         SessionRegistry* registry) {
    params.validate();
    RunResult res;
    const double R = params.safety_radius;
    const double c0 = clearance(world, x0);
    if (!(c0 > 2 * R)) {
        auto msg = fmt::format("start clearance {:.6g} does not exceed 2R = {:.6g}", c0, 2 * R);
        if (!params.allow_close_start) throw NavError(msg);
        res.trace.warnings.push_back(msg);
    }

    SessionRegistry local;
    SessionRegistry& reg = registry ? *registry : local;
    const int handle = reg.open();
    struct Closer {
        SessionRegistry& reg;
        int handle;
        bool done = false;
        ~Closer() {
            if (done) return;
            try {
                reg.close(handle);
            } catch (...) {
            }
        }
    } closer{reg, handle};

    Point x = x0;
    int prev_n = -1;
    Polygon last_poly;
    for (long step = 0;; ++step) {
        Scan scan;
        try {
            reg.use(handle);
            scan = sense(world, x, params);
        } catch (const InsideObstacle& e) {
            res.outcome.kind = OutcomeKind::Halted;
            res.outcome.detail = e.what();
            break;
        }
        auto per = perceive(scan, x, params);
        TraceStep row;
        row.step = step;
        row.x = x;
        row.n_visible = per.components.n;
        if (prev_n >= 0 && row.n_visible > prev_n) row.event = Event::NewObs;
        if (prev_n >= 0 && row.n_visible < prev_n) row.event = Event::LoseObs;
        prev_n = row.n_visible;
        const auto u = sem::UncertaintySet::around(scan, params.noise);
        row.safe = sem::monitor_safe(u, R).verdict;
        row.see = sem::monitor_see(u, row.n_visible, params.sensor_range);
        row.at = sem::monitor_at(x, 0.0, g, params.goal_tolerance);
        row.min_clearance = clearance(world, x);
        if (params.keep_scans) row.scan = scan;
        res.trace.steps.push_back(std::move(row));

        if ((x - g).norm() < params.goal_tolerance) {
            res.outcome.kind = OutcomeKind::AtGoal;
            break;
        }
        if (auto pair = separation_check(per.circles, R)) {
            auto& o = res.outcome;
            o.kind = OutcomeKind::SeparationViolation;
            o.first = per.circles[pair->first];
            o.second = per.circles[pair->second];
            o.world_i = match_world(world, o.first);
            o.world_j = match_world(world, o.second);
            const double gap = (o.first.center - o.second.center).norm() - o.first.radius - o.second.radius;
            o.detail = fmt::format("estimated gap {:.6g} <= 2R between disks at ({:.6g}, {:.6g}) and ({:.6g}, {:.6g})",
                                   gap, o.first.center.x(), o.first.center.y(), o.second.center.x(),
                                   o.second.center.y());
            break;
        }
        if (step >= params.max_steps) {
            res.outcome.kind = OutcomeKind::Timeout;
            break;
        }
        std::vector<Point> nearest;
        for (const auto& c : per.circles) {
            const Point v = x - c.center;
            nearest.push_back(c.center + c.radius * v / v.norm());
        }
        nearest.insert(nearest.end(), per.loose_hits.begin(), per.loose_hits.end());
        try {
            last_poly = local_free_space(x, nearest, params, g);
        } catch (const EmptyPolygon& e) {
            res.outcome.kind = OutcomeKind::Halted;
            res.outcome.detail = e.what();
            res.trace.steps.back().safe = sem::Verdict::Fails;
            break;
        }
        x = step_dynamics(x, project_goal(last_poly, g), params);
    }
    res.trace.final_free_space = last_poly;

    closer.done = true;
    reg.close(handle);
    if (!registry) reg.finish();
    res.sessions_opened = reg.opened();
    res.sessions_closed = reg.closed();
    return res;
}

std::vector<BatchItem> run_batch(const std::vector<std::uint64_t>& seeds, const NavParams& params,
                                 bool violation_worlds, bool parallel) {
    std::vector<BatchItem> out(seeds.size());
    const long n = static_cast<long>(seeds.size());
    GeneratorParams gp;
    gp.safety_radius = params.safety_radius;
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (long i = 0; i < n; ++i) {
        auto& item = out[i];
        item.seed = seeds[i];
        try {
            item.world = violation_worlds ? generate_violation_world(seeds[i], gp) : generate_world(seeds[i], gp);
            item.result = run_controller(item.world, item.world.start, item.world.goal, params);
        } catch (const std::exception& e) {
            item.result.outcome.kind = OutcomeKind::Halted;
            item.result.outcome.detail = e.what();
        }
    }
    return out;
}

} // namespace hydranav::nav
