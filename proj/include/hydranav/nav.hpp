#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hydranav/semantics.hpp"

namespace hydranav::nav {

using Point = Eigen::Vector2d;
using sem::Scan;

struct Disk {
    Point center = Point::Zero();
    double radius = 0.0;
};

struct World {
    std::vector<Disk> obstacles;
    Point lo = Point(-10, -10);
    Point hi = Point(10, 10);
    Point start = Point::Zero();
    Point goal = Point::Zero();
};

enum class FreeSpaceRule {
    // Bisector of x and p pulled back by R toward x.
    PointBisector,
    // Max-margin line between the robot disk B(x, R) and p, eroded by R:
    // the bisector pulled back by R / 2.
    BodyBisector,
};

struct NavParams {
    double safety_radius = 0.5; // R
    double sensor_range = 5.0;  // M
    int rays = 64;              // N
    double goal_tolerance = 0.05;
    double gain = 1.0;
    double dt = 0.02;
    long max_steps = 100000;
    double noise = 0.0; // half-width of the per-ray uncertainty interval
    FreeSpaceRule free_space_rule = FreeSpaceRule::BodyBisector;
    bool allow_close_start = false; // downgrade the 2R start-clearance check to a warning
    bool keep_scans = false;

    void validate() const;
};

class NavError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};
class InsideObstacle : public NavError {
  public:
    using NavError::NavError;
};
class EmptyPolygon : public NavError {
  public:
    using NavError::NavError;
};
class HandleReuse : public NavError {
  public:
    using NavError::NavError;
};
class HandleLeak : public NavError {
  public:
    using NavError::NavError;
};

Point ray_direction(int j, int rays);

Scan sense(const World& world, const Point& x, const NavParams& params);
// OpenMP over rays; identical results to `sense`.
Scan sense_parallel(const World& world, const Point& x, const NavParams& params);

// Circular run of rays [first, first + length) modulo N.
struct Arc {
    int first = 0;
    int length = 0;
    int ray(int i, int rays) const { return (first + i) % rays; }
};

struct Components {
    int n = 0;
    std::vector<Arc> arcs;
};

Components detect_components(const Scan& scan, double m);

Point hit_point(const Scan& scan, int ray, const Point& x);

// One circle per arc through its first, middle and last hits; arcs shorter than
// three rays, or with collinear samples, give a radius-0 obstacle at the nearest hit.
std::vector<Disk> estimate_obstacles(const Scan& scan, const std::vector<Arc>& arcs, const Point& x);

std::optional<Disk> circumcircle(const Point& a, const Point& b, const Point& c);

// Counter-clockwise convex polygon.
using Polygon = std::vector<Point>;

// 32-gon of radius M/2 about x (first vertex toward `heading` when given), clipped
// by one half-plane per nearest obstacle point.
Polygon local_free_space(const Point& x, const std::vector<Point>& nearest, const NavParams& params,
                         std::optional<Point> heading = std::nullopt);

Polygon clip(const Polygon& poly, const Point& normal, double offset); // keep normal . q <= offset
bool contains(const Polygon& poly, const Point& q, double tol = 1e-12);
double area(const Polygon& poly);

Point project_goal(const Polygon& poly, const Point& g);

Point step_dynamics(const Point& x, const Point& target, const NavParams& params);

std::optional<std::pair<int, int>> separation_check(const std::vector<Disk>& obstacles, double R);

double clearance(const World& world, const Point& x);

// Runtime mirror of the linear sensor session: each handle opened once, closed once.
class SessionRegistry {
  public:
    int open();
    void use(int handle) const;
    void close(int handle);
    // Throws HandleLeak when a handle is still open.
    void finish() const;
    int opened() const { return opened_; }
    int closed() const { return closed_; }

  private:
    std::vector<char> open_;
    int opened_ = 0;
    int closed_ = 0;
};

enum class OutcomeKind { AtGoal, SeparationViolation, Timeout, Halted };
std::string_view to_string(OutcomeKind k);

struct Outcome {
    OutcomeKind kind = OutcomeKind::Timeout;
    // SeparationViolation: the estimated disks and the world obstacles they match (-1 if none).
    Disk first, second;
    int world_i = -1, world_j = -1;
    std::string detail;
};

enum class Event { None, NewObs, LoseObs };
std::string_view to_string(Event e);

struct TraceStep {
    long step = 0;
    Point x = Point::Zero();
    int n_visible = 0;
    Event event = Event::None;
    sem::Verdict safe = sem::Verdict::Holds;
    sem::Verdict see = sem::Verdict::Holds;
    sem::Verdict at = sem::Verdict::Fails;
    double min_clearance = sem::kInf;
    Scan scan; // only with NavParams::keep_scans
};

struct Trace {
    std::vector<TraceStep> steps;
    Polygon final_free_space;
    std::vector<std::string> warnings;
};

struct RunResult {
    Outcome outcome;
    Trace trace;
    int sessions_opened = 0;
    int sessions_closed = 0;
};

// Estimated circles the controller trusts (every hit of their segment lies on them)
// and the raw hits it could not attribute to a circle.
struct Perception {
    Components components;
    std::vector<Disk> circles;
    std::vector<Point> loose_hits;
};
Perception perceive(const Scan& scan, const Point& x, const NavParams& params);

RunResult run_controller(const World& world, const Point& x0, const Point& g, const NavParams& params,
                         SessionRegistry* registry = nullptr);

struct BatchItem {
    std::uint64_t seed = 0;
    World world;
    RunResult result;
};

// One run per seed on a generated world; OpenMP over seeds unless `parallel` is false.
std::vector<BatchItem> run_batch(const std::vector<std::uint64_t>& seeds, const NavParams& params,
                                 bool violation_worlds = false, bool parallel = true);

// World and parameter files (YAML).
World load_world(const std::string& path);
World parse_world(const std::string& yaml_text);
std::string dump_world(const World& w);
NavParams load_params(const std::string& path, NavParams base = {});

struct GeneratorParams {
    int min_obstacles = 3;
    int max_obstacles = 6;
    double min_radius = 0.5;
    double max_radius = 1.5;
    double margin = 0.2; // gaps must exceed 2R + margin
    double safety_radius = 0.5;
    double size = 20.0;  // square workspace [0, size]^2
};

// Worlds satisfying the separation and start/goal clearance hypotheses.
World generate_world(std::uint64_t seed, const GeneratorParams& gp = {});
// One obstacle pair with surface gap in [0.2, 0.8] (<= 2R) straddling the start-goal segment.
World generate_violation_world(std::uint64_t seed, const GeneratorParams& gp = {});

std::string trace_csv(const RunResult& r, const std::vector<std::string>& header = {});
std::string params_line(const NavParams& p);
NavParams parse_params_line(const std::string& line);

struct CsvTrace {
    std::vector<Point> positions;
    std::vector<std::string> header;
};
CsvTrace read_trace_csv(const std::string& text);

std::string plot_svg(const World& world, const std::vector<std::vector<Point>>& paths, const Polygon& free_space);

} // namespace hydranav::nav
