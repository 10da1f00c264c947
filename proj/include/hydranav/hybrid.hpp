#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "hydranav/expr.hpp"

namespace hydranav::hybrid {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Box {
    Vec lo, hi;
    int dim() const { return static_cast<int>(lo.size()); }
    bool contains(const Vec& x, double tol = 0.0) const;
    Vec clamp(const Vec& x) const;
};

struct Mode {
    std::string label;
    int dim = 0;
    Box domain;
    std::vector<expr::Expr> field; // one component per coordinate
    Vec flow(const Vec& x) const { return expr::eval(field, x); }
};

// Reset map r(x) = A x + b from mode `src` to mode `dst`.
struct Reset {
    std::string label;
    int src = 0;
    int dst = 0;
    Mat A;
    Vec b;
    Vec apply(const Vec& x) const { return A * x + b; }
};

struct HybridSystem {
    std::vector<Mode> modes;
    std::vector<Reset> edges;

    int vertex_count() const { return static_cast<int>(modes.size()); }
    int edge_count() const { return static_cast<int>(edges.size()); }
    // Throws HybridError(DimensionMismatch) when a reset or field disagrees with its modes.
    void validate() const;
};

// Per-vertex map of a semiconjugacy: affine `A x + b`, or a closed-form map
// given componentwise by `exprs` when that is non-empty.
struct VertexMap {
    Mat A;
    Vec b;
    std::vector<expr::Expr> exprs;

    static VertexMap affine(Mat A, Vec b);
    static VertexMap identity(int dim);
    static VertexMap closed_form(std::vector<expr::Expr> exprs, int in_dim);
    bool is_affine() const { return exprs.empty(); }
    int in_dim() const;
    int out_dim() const;
    Vec apply(const Vec& x) const;
    Mat jacobian(const Vec& x) const;
};

struct Semiconjugacy {
    std::vector<int> vertex_map;
    std::vector<int> edge_map;
    std::vector<VertexMap> maps; // indexed by source vertex
};

// A cospan H_i -> H <- H_f of semiconjugacies.
struct DirectedSystem {
    HybridSystem apex;
    HybridSystem initial;
    HybridSystem final_;
    Semiconjugacy initial_leg;
    Semiconjugacy final_leg;
};

enum class ErrorKind {
    DimensionMismatch,
    SquareFailure,
    FlowFailure,
    InterfaceMismatch,
    NonEmbeddingLeg,
    SizeLimitExceeded,
    Injectivity,
    Invertibility,
    SinkViolation,
    ChainFailure,
};

std::string_view to_string(ErrorKind k);

class HybridError : public std::runtime_error {
  public:
    HybridError(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

  private:
    ErrorKind kind_;
};

struct Failure {
    ErrorKind kind;
    int vertex = -1;
    int edge = -1;
    Vec witness;
    std::string message;
};

struct Report {
    std::vector<Failure> failures;
    bool ok() const { return failures.empty(); }
    bool has(ErrorKind k) const;
};

// Quasi-random points (Halton sequence) in a box; degenerate axes stay fixed.
std::vector<Vec> halton_samples(const Box& box, int count);

constexpr double kTolerance = 1e-9;

Report validate_semiconjugacy(const Semiconjugacy& alpha, const HybridSystem& src, const HybridSystem& dst,
                              int samples = 64);

DirectedSystem compose_sequential(const DirectedSystem& h1, const DirectedSystem& h2);
DirectedSystem compose_parallel(const DirectedSystem& h1, const DirectedSystem& h2);
HybridSystem product(const HybridSystem& a, const HybridSystem& b);

// K -> K <- K with identity legs.
DirectedSystem identity_cospan(const HybridSystem& k);

struct ChainOptions {
    double eps = 0.05;
    double horizon = 2.0;
    int grid = 64;
    int max_cells_per_mode = 1 << 16;
};

struct DirectedReport {
    Report legs;          // semiconjugacy validity of both legs
    Report embedding;     // condition (i)
    Report invertibility; // condition (ii)
    Report sink;          // condition (iii)
    Report chain;         // condition (iv), approximate
    int cells = 0;
    int reached = 0;
    bool ok() const { return legs.ok() && embedding.ok() && invertibility.ok() && sink.ok() && chain.ok(); }
};

DirectedReport validate_directed(const DirectedSystem& d, const ChainOptions& opts = {});

// Grid abstraction used by condition (iv): cells of every mode and their successors.
struct CellGraph {
    std::vector<int> mode_of;        // per cell
    std::vector<Vec> center;         // per cell
    std::vector<std::vector<int>> succ;
    std::vector<int> first_cell;     // per mode, plus a final sentinel
};

CellGraph build_cell_graph(const HybridSystem& h, const ChainOptions& opts, bool parallel = true);

// Cells whose closed box meets `target` fattened by eps.
std::vector<char> target_cells(const CellGraph& g, const HybridSystem& h, int mode, const Box& target, double eps,
                               const ChainOptions& opts);

bool conjugacy_iso_check(const DirectedSystem& h1, const DirectedSystem& h2, int max_vertices = 12);

// JSON documents: {"apex", "initial", "final", "initial_leg", "final_leg"}; a system is
// {"modes": [{"label", "domain": [[lo, hi], ...], "field": ["expr", ...]}],
//  "edges": [{"label", "src", "dst", "A": [[...]], "b": [...]}]}; a leg is
// {"vertices": [...], "edges": [...], "maps": [{"A", "b"} or {"exprs": [...]}]}.
DirectedSystem parse_directed(std::string_view json_text);
std::string serialize(const DirectedSystem& d);

// Composition of the vertex maps: (g . f)(x) = g(f(x)), affine when both are.
VertexMap compose(const VertexMap& g, const VertexMap& f);

} // namespace hydranav::hybrid
