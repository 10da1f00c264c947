#pragma once

#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hydranav/hybrid.hpp"
#include "hydranav/syntax.hpp"

namespace hydranav::sem {

using Point = Eigen::Vector2d;

constexpr double kInf = std::numeric_limits<double>::infinity();

// One range reading per ray; ray j points at angle 2*pi*j/N. +inf means no return.
using Scan = std::vector<double>;

class SemanticsError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class NotASubset : public SemanticsError {
  public:
    using SemanticsError::SemanticsError;
};

class NotDenotable : public SemanticsError {
  public:
    using SemanticsError::SemanticsError;
};

// Per-ray interval bounds; a scan f belongs to U iff lo_j <= f_j <= hi_j for every ray.
class UncertaintySet {
  public:
    UncertaintySet() = default;
    UncertaintySet(std::vector<double> lo, std::vector<double> hi);
    static UncertaintySet exact(const Scan& f);
    // Each finite reading widened to [f - eta, f + eta] (clamped at 0); +inf stays exact.
    static UncertaintySet around(const Scan& f, double eta);

    std::size_t size() const { return lo_.size(); }
    double lo(std::size_t j) const { return lo_[j]; }
    double hi(std::size_t j) const { return hi_[j]; }
    bool contains(const Scan& f) const;
    bool subset_of(const UncertaintySet& u) const;

  private:
    std::vector<double> lo_, hi_;
};

enum class Verdict { Holds, Fails, Indeterminate };
std::string_view to_string(Verdict v);

// Number of circular runs of set entries; a full circle counts once.
int circular_components(const std::vector<char>& mask);

// Smallest and largest |pi_0(f^-1([0, m]))| over f in U.
struct CountRange {
    int min = 0;
    int max = 0;
};
CountRange see_count_range(const UncertaintySet& u, double m);

Verdict monitor_see(const UncertaintySet& u, int n, double m);

Verdict monitor_at(const Point& x_est, double est_radius, const Point& g, double eps);

enum class SafeMode { Conservative, Optimistic };

struct SafeVerdict {
    Verdict verdict = Verdict::Holds;
    int witness_ray = -1;   // ray attaining the minimum bound
    double witness_value = kInf;
};
SafeVerdict monitor_safe(const UncertaintySet& u, double r, SafeMode mode = SafeMode::Conservative);

// Returns `sub` after checking it is contained in `u` ray by ray.
UncertaintySet restrict(const UncertaintySet& u, const UncertaintySet& sub);

struct MonitorInput {
    UncertaintySet u;
    Point pose = Point::Zero();
    double pose_radius = 0.0;
};

struct DenoteOptions {
    double sensor_range = 5.0; // M in See(n)
    double goal_tolerance = 0.05;
    double safety_radius = 0.5;
    SafeMode safe_mode = SafeMode::Conservative;
    double workspace = 10.0; // X is the box [-workspace, workspace]^2
};

struct Denotation {
    hybrid::HybridSystem system;
    std::function<Verdict(const MonitorInput&)> monitor;
};

// Simple types and Unit only; See's argument must normalize to a literal and
// At's to a point literal.
Denotation denote(const syntax::TypePtr& t, const DenoteOptions& opts = {});

} // namespace hydranav::sem
