#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "hydranav/nav.hpp"

namespace hydranav::nav {

namespace {

Point read_point(const YAML::Node& n, const char* what) {
    if (!n || !n.IsSequence() || n.size() != 2) throw NavError(fmt::format("{} must be a pair [x, y]", what));
    return {n[0].as<double>(), n[1].as<double>()};
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw NavError(fmt::format("cannot open {}", path));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : g_(seed * 0x9E3779B97F4A7C15ull + 0x2545F4914F6CDD1Dull) {}
    double uniform(double lo, double hi) { return lo + (hi - lo) * ((g_() >> 11) * 0x1.0p-53); }
    int integer(int lo, int hi) { return lo + static_cast<int>(g_() % static_cast<std::uint64_t>(hi - lo + 1)); }

  private:
    std::mt19937_64 g_;
};

double gap(const Disk& a, const Disk& b) { return (a.center - b.center).norm() - a.radius - b.radius; }

bool fits(const std::vector<Disk>& placed, const Disk& d, const World& w, double need) {
    for (const auto& o : placed)
        if (!(gap(o, d) > need)) return false;
    for (const Point& p : {w.start, w.goal})
        if (!((p - d.center).norm() - d.radius > need)) return false;
    return true;
}

} // namespace

World parse_world(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw NavError(fmt::format("world file: {}", e.what()));
    }
    World w;
    try {
        w.start = read_point(root["start"], "start");
        w.goal = read_point(root["goal"], "goal");
        if (auto obs = root["obstacles"]) {
            if (!obs.IsSequence()) throw NavError("obstacles must be a list");
            for (const auto& o : obs) {
                Disk d{read_point(o["center"], "obstacle center"), o["radius"].as<double>()};
                if (!(d.radius > 0)) throw NavError("obstacle radius must be positive");
                w.obstacles.push_back(d);
            }
        }
        if (auto b = root["bounds"]) {
            if (!b.IsSequence() || b.size() != 2) throw NavError("bounds must be [[xmin, xmax], [ymin, ymax]]");
            Point xs = read_point(b[0], "bounds x"), ys = read_point(b[1], "bounds y");
            w.lo = {xs[0], ys[0]};
            w.hi = {xs[1], ys[1]};
        } else {
            w.lo = w.start.cwiseMin(w.goal);
            w.hi = w.start.cwiseMax(w.goal);
            for (const auto& o : w.obstacles) {
                w.lo = w.lo.cwiseMin((o.center.array() - o.radius).matrix());
                w.hi = w.hi.cwiseMax((o.center.array() + o.radius).matrix());
            }
            w.lo.array() -= 1.0;
            w.hi.array() += 1.0;
        }
    } catch (const YAML::Exception& e) {
        throw NavError(fmt::format("world file: {}", e.what()));
    }
    return w;
}

World load_world(const std::string& path) {
    try {
        return parse_world(slurp(path));
    } catch (const NavError& e) {
        throw NavError(fmt::format("{}: {}", path, e.what()));
    }
}

std::string dump_world(const World& w) {
    std::string out;
    out += fmt::format("bounds: [[{:.17g}, {:.17g}], [{:.17g}, {:.17g}]]\n", w.lo.x(), w.hi.x(), w.lo.y(), w.hi.y());
    out += fmt::format("start: [{:.17g}, {:.17g}]\n", w.start.x(), w.start.y());
    out += fmt::format("goal: [{:.17g}, {:.17g}]\n", w.goal.x(), w.goal.y());
    out += "obstacles:\n";
    for (const auto& o : w.obstacles)
        out += fmt::format("  - {{center: [{:.17g}, {:.17g}], radius: {:.17g}}}\n", o.center.x(), o.center.y(), o.radius);
    return out;
}

NavParams load_params(const std::string& path, NavParams p) {
    YAML::Node root;
    try {
        root = YAML::Load(slurp(path));
        for (const auto& kv : root) {
            const auto key = kv.first.as<std::string>();
            const auto& v = kv.second;
            if (key == "safety_radius") p.safety_radius = v.as<double>();
            else if (key == "sensor_range") p.sensor_range = v.as<double>();
            else if (key == "rays") p.rays = v.as<int>();
            else if (key == "goal_tolerance") p.goal_tolerance = v.as<double>();
            else if (key == "gain") p.gain = v.as<double>();
            else if (key == "dt") p.dt = v.as<double>();
            else if (key == "max_steps") p.max_steps = v.as<long>();
            else if (key == "noise") p.noise = v.as<double>();
            else if (key == "allow_close_start") p.allow_close_start = v.as<bool>();
            else if (key == "keep_scans") p.keep_scans = v.as<bool>();
            else if (key == "free_space_rule") {
                auto r = v.as<std::string>();
                if (r == "body") p.free_space_rule = FreeSpaceRule::BodyBisector;
                else if (r == "point") p.free_space_rule = FreeSpaceRule::PointBisector;
                else throw NavError(fmt::format("free_space_rule must be body or point, got {}", r));
            } else
                throw NavError(fmt::format("unknown parameter '{}'", key));
        }
    } catch (const YAML::Exception& e) {
        throw NavError(fmt::format("{}: {}", path, e.what()));
    } catch (const NavError& e) {
        throw NavError(fmt::format("{}: {}", path, e.what()));
    }
    p.validate();
    return p;
}

World generate_world(std::uint64_t seed, const GeneratorParams& gp) {
    Rng rng(seed);
    const double S = gp.size;
    const double need = 2 * gp.safety_radius + gp.margin;
    for (int attempt = 0; attempt < 10000; ++attempt) {
        World w;
        w.lo = Point(0, 0);
        w.hi = Point(S, S);
        w.start = {rng.uniform(1, 3), rng.uniform(2, S - 2)};
        w.goal = {rng.uniform(S - 3, S - 1), rng.uniform(2, S - 2)};
        const int count = rng.integer(gp.min_obstacles, gp.max_obstacles);
        bool ok = true;
        for (int k = 0; k < count && ok; ++k) {
            ok = false;
            for (int t = 0; t < 1000 && !ok; ++t) {
                Disk d;
                d.radius = rng.uniform(gp.min_radius, gp.max_radius);
                if (k == 0) {
                    // One obstacle near the straight path so the run has to steer.
                    const Point dir = (w.goal - w.start).normalized();
                    const Point perp(-dir.y(), dir.x());
                    d.center = w.start + rng.uniform(0.3, 0.7) * (w.goal - w.start) + rng.uniform(-0.5, 0.5) * perp;
                } else {
                    d.center = {rng.uniform(4, S - 4), rng.uniform(2, S - 2)};
                }
                if (fits(w.obstacles, d, w, need)) {
                    w.obstacles.push_back(d);
                    ok = true;
                }
            }
        }
        if (ok) return w;
    }
    throw NavError(fmt::format("seed {}: could not place obstacles", seed));
}

World generate_violation_world(std::uint64_t seed, const GeneratorParams& gp) {
    Rng rng(seed ^ 0xA5A5A5A5ull);
    const double S = gp.size;
    const double need = 2 * gp.safety_radius + gp.margin;
    for (int attempt = 0; attempt < 10000; ++attempt) {
        World w;
        w.lo = Point(0, 0);
        w.hi = Point(S, S);
        w.start = {2, S / 2 + rng.uniform(-1, 1)};
        w.goal = {S - 2, S / 2 + rng.uniform(-1, 1)};
        const double cx = rng.uniform(0.4 * S, 0.6 * S);
        const double yl = w.start.y() + (cx - w.start.x()) / (w.goal.x() - w.start.x()) * (w.goal.y() - w.start.y());
        const double g = rng.uniform(0.2, 0.8);
        const double shift = rng.uniform(-0.4, 0.4) * g;
        const double r1 = rng.uniform(gp.min_radius, gp.max_radius), r2 = rng.uniform(gp.min_radius, gp.max_radius);
        w.obstacles.push_back({Point(cx, yl + shift + g / 2 + r1), r1});
        w.obstacles.push_back({Point(cx, yl + shift - g / 2 - r2), r2});
        const int extra = rng.integer(0, 2);
        for (int k = 0; k < extra; ++k)
            for (int t = 0; t < 1000; ++t) {
                Disk d{{rng.uniform(4, S - 4), rng.uniform(1, S - 1)}, rng.uniform(gp.min_radius, gp.max_radius)};
                if (std::abs(d.center.y() - S / 2) - d.radius < 5) continue;
                if (fits(w.obstacles, d, w, need)) {
                    w.obstacles.push_back(d);
                    break;
                }
            }
        return w;
    }
    throw NavError("unreachable");
}

std::string params_line(const NavParams& p) {
    return fmt::format("R={:.17g} M={:.17g} N={} eps={:.17g} k={:.17g} dt={:.17g} max_steps={} noise={:.17g} rule={}",
                       p.safety_radius, p.sensor_range, p.rays, p.goal_tolerance, p.gain, p.dt, p.max_steps, p.noise,
                       p.free_space_rule == FreeSpaceRule::BodyBisector ? "body" : "point");
}

NavParams parse_params_line(const std::string& line) {
    NavParams p;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        auto k = tok.substr(0, eq), v = tok.substr(eq + 1);
        if (k == "R") p.safety_radius = std::stod(v);
        else if (k == "M") p.sensor_range = std::stod(v);
        else if (k == "N") p.rays = std::stoi(v);
        else if (k == "eps") p.goal_tolerance = std::stod(v);
        else if (k == "k") p.gain = std::stod(v);
        else if (k == "dt") p.dt = std::stod(v);
        else if (k == "max_steps") p.max_steps = std::stol(v);
        else if (k == "noise") p.noise = std::stod(v);
        else if (k == "rule") p.free_space_rule = v == "point" ? FreeSpaceRule::PointBisector : FreeSpaceRule::BodyBisector;
    }
    return p;
}

std::string trace_csv(const RunResult& r, const std::vector<std::string>& header) {
    std::string out = "# hydranav trace\n";
    for (const auto& h : header) out += "# " + h + "\n";
    out += fmt::format("# outcome: {}", to_string(r.outcome.kind));
    if (!r.outcome.detail.empty()) out += " (" + r.outcome.detail + ")";
    out += "\n";
    for (const auto& w : r.trace.warnings) out += "# warning: " + w + "\n";
    out += "step,x,y,n_visible,event,safe_verdict,min_clearance\n";
    for (const auto& s : r.trace.steps)
        out += fmt::format("{},{:.9f},{:.9f},{},{},{},{:.9f}\n", s.step, s.x.x(), s.x.y(), s.n_visible,
                           to_string(s.event), sem::to_string(s.safe), s.min_clearance);
    return out;
}

CsvTrace read_trace_csv(const std::string& text) {
    CsvTrace t;
    std::istringstream in(text);
    std::string line;
    bool seen_columns = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            t.header.push_back(line.size() > 2 ? line.substr(2) : "");
            continue;
        }
        if (!seen_columns) {
            if (line.rfind("step,", 0) != 0) throw NavError("trace: missing column header");
            seen_columns = true;
            continue;
        }
        std::istringstream row(line);
        std::string step, x, y;
        if (!std::getline(row, step, ',') || !std::getline(row, x, ',') || !std::getline(row, y, ','))
            throw NavError(fmt::format("trace: malformed row '{}'", line));
        try {
            t.positions.emplace_back(std::stod(x), std::stod(y));
        } catch (const std::exception&) {
            throw NavError(fmt::format("trace: malformed row '{}'", line));
        }
    }
    if (!seen_columns) throw NavError("trace: missing column header");
    return t;
}

std::string plot_svg(const World& world, const std::vector<std::vector<Point>>& paths, const Polygon& free_space) {
    const Point lo = world.lo, hi = world.hi;
    const double w = hi.x() - lo.x(), h = hi.y() - lo.y();
    const double sw = 0.004 * std::max(w, h);
    auto X = [&](const Point& p) { return p.x(); };
    auto Y = [&](const Point& p) { return lo.y() + hi.y() - p.y(); };
    std::string out = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\" width=\"800\" height=\"{}\">\n", lo.x(),
        lo.y(), w, h, static_cast<int>(800 * h / w));
    out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"white\" stroke=\"black\" "
                       "stroke-width=\"{}\"/>\n",
                       lo.x(), lo.y(), w, h, sw);
    for (const auto& o : world.obstacles)
        out += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"#888\"/>\n", X(o.center), Y(o.center), o.radius);
    if (free_space.size() >= 3) {
        out += "<polygon fill=\"#8cf\" fill-opacity=\"0.4\" stroke=\"#06c\" stroke-width=\"" + fmt::format("{}", sw) +
               "\" points=\"";
        for (const auto& p : free_space) out += fmt::format("{},{} ", X(p), Y(p));
        out += "\"/>\n";
    }
    for (const auto& path : paths) {
        if (path.empty()) continue;
        out += fmt::format("<path fill=\"none\" stroke=\"#c00\" stroke-width=\"{}\" d=\"", sw);
        for (std::size_t i = 0; i < path.size(); ++i)
            out += fmt::format("{}{:.4f} {:.4f}", i == 0 ? "M" : " L", X(path[i]), Y(path[i]));
        out += "\"/>\n";
    }
    out += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"green\"/>\n", X(world.start), Y(world.start), 3 * sw);
    out += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"blue\"/>\n", X(world.goal), Y(world.goal), 3 * sw);
    out += "</svg>\n";
    return out;
}

} // namespace hydranav::nav
