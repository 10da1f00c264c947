#include <cmath>
#include <random>

#include <doctest.h>

#include "common.hpp"
#include "hybrid_gen.hpp"
#include "hydranav/hybrid.hpp"

using namespace hydranav;
using namespace hydranav::hybrid;

namespace {

DirectedSystem fixture(const std::string& name) { return parse_directed(read_text("tests/fixtures/hybrid/" + name)); }

HybridSystem one_mode(const std::string& label, std::vector<std::string> field, double half) {
    HybridSystem h;
    Mode m;
    m.label = label;
    m.dim = static_cast<int>(field.size());
    m.domain = Box{Vec::Constant(m.dim, -half), Vec::Constant(m.dim, half)};
    for (const auto& f : field) m.field.push_back(expr::parse(f));
    h.modes.push_back(m);
    return h;
}

Reset self_loop(const std::string& label, Mat A) {
    Reset r;
    r.label = label;
    r.A = std::move(A);
    r.b = Vec::Zero(r.A.rows());
    return r;
}

Semiconjugacy single(VertexMap m, std::vector<int> edges = {}) {
    Semiconjugacy s;
    s.vertex_map = {0};
    s.edge_map = std::move(edges);
    s.maps = {std::move(m)};
    return s;
}

Mat scalar(double v) { return Mat::Constant(1, 1, v); }

// Apex vertices renumbered by `perm` (old index -> new index), legs and edges follow.
DirectedSystem permuted(const DirectedSystem& d, const std::vector<int>& perm) {
    DirectedSystem out = d;
    for (std::size_t v = 0; v < perm.size(); ++v) out.apex.modes[perm[v]] = d.apex.modes[v];
    for (auto& e : out.apex.edges) {
        e.src = perm[e.src];
        e.dst = perm[e.dst];
    }
    for (auto& v : out.initial_leg.vertex_map) v = perm[v];
    for (auto& v : out.final_leg.vertex_map) v = perm[v];
    return out;
}

// Independent derivative oracle: central differences.
double central(const expr::Expr& e, Vec x, int i, double h = 1e-5) {
    Vec a = x, b = x;
    a(i) += h;
    b(i) -= h;
    return (expr::eval(e, a) - expr::eval(e, b)) / (2 * h);
}

} // namespace

TEST_CASE("expressions parse, print and evaluate") {
    auto e = expr::parse("2*x0 - sin(x1)^2 + 1.5e-1");
    Vec x(2);
    x << 0.3, -1.1;
    CHECK(expr::eval(e, x) == doctest::Approx(2 * 0.3 - std::pow(std::sin(-1.1), 2) + 0.15));
    auto again = expr::parse(expr::print(e));
    CHECK(expr::eval(again, x) == doctest::Approx(expr::eval(e, x)));
    CHECK(expr::max_var(e) == 1);
    CHECK(expr::eval(expr::parse("-x + y*z"), Vec::Constant(3, 2.0)) == doctest::Approx(2.0));
    CHECK_THROWS_AS(expr::parse("x +"), expr::ParseError);
    CHECK_THROWS_AS(expr::parse("foo(x)"), expr::ParseError);
}

TEST_CASE("symbolic derivatives agree with central differences") {
    const char* cases[] = {"x0*x1", "sin(x0)*cos(x1)", "exp(0.5*x0) - x1^3", "x0/(2 + x1^2)", "cos(x0*x1) + 3"};
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (const char* c : cases) {
        auto e = expr::parse(c);
        for (int t = 0; t < 20; ++t) {
            Vec x(2);
            x << u(rng), u(rng);
            for (int i = 0; i < 2; ++i) CHECK(expr::eval(expr::derivative(e, i), x) == doctest::Approx(central(e, x, i)).epsilon(1e-6));
        }
    }
}

TEST_CASE("affine substitution composes with evaluation") {
    auto e = expr::parse("x0*x0 + 3*x1");
    Mat A(2, 2);
    A << 1, 2, 0, -1;
    Vec b(2);
    b << 0.5, 1;
    auto s = expr::substitute_affine(e, A, b);
    Vec y(2);
    y << 0.7, -0.2;
    CHECK(expr::eval(s, y) == doctest::Approx(expr::eval(e, A * y + b)));
}

TEST_CASE("halton samples stay in the box") {
    Box b{Vec::Constant(2, -1.0), Vec::Constant(2, 3.0)};
    auto pts = halton_samples(b, 100);
    CHECK(pts.size() == 100);
    for (const auto& p : pts) CHECK(b.contains(p));
    CHECK((pts[0] - pts[1]).norm() > 0);
}

TEST_CASE("semiconjugacy: valid affine map") {
    auto src = one_mode("a", {"-x"}, 1);
    auto dst = one_mode("b", {"-x"}, 2);
    auto r = validate_semiconjugacy(single(VertexMap::affine(scalar(2), Vec::Zero(1))), src, dst);
    CHECK(r.ok());
}

TEST_CASE("semiconjugacy: flow failure is reported with a witness") {
    auto src = one_mode("a", {"-x"}, 1);
    auto dst = one_mode("b", {"-2*x"}, 2);
    auto r = validate_semiconjugacy(single(VertexMap::affine(scalar(2), Vec::Zero(1))), src, dst);
    REQUIRE(r.has(ErrorKind::FlowFailure));
    CHECK(r.failures[0].witness.size() == 1);
}

TEST_CASE("semiconjugacy: square failure on resets") {
    auto src = one_mode("a", {"-x"}, 1);
    auto dst = one_mode("b", {"-x"}, 2);
    src.edges.push_back(self_loop("r", scalar(0.5)));
    dst.edges.push_back(self_loop("r", scalar(0.25)));
    auto bad = validate_semiconjugacy(single(VertexMap::affine(scalar(2), Vec::Zero(1)), {0}), src, dst);
    CHECK(bad.has(ErrorKind::SquareFailure));
    dst.edges[0].A = scalar(0.5);
    auto good = validate_semiconjugacy(single(VertexMap::affine(scalar(2), Vec::Zero(1)), {0}), src, dst);
    CHECK(good.ok());
}

TEST_CASE("semiconjugacy: closed-form map x^2") {
    // x' = x is sent to y' = 2y by y = x^2; the reset x -> -x lands on the identity.
    auto src = one_mode("a", {"x"}, 2);
    auto dst = one_mode("b", {"2*x"}, 10);
    src.edges.push_back(self_loop("flip", scalar(-1)));
    dst.edges.push_back(self_loop("id", scalar(1)));
    auto sq = VertexMap::closed_form({expr::parse("x^2")}, 1);
    CHECK(validate_semiconjugacy(single(sq, {0}), src, dst).ok());
    dst.modes[0].field = {expr::parse("x")};
    CHECK(validate_semiconjugacy(single(sq, {0}), src, dst).has(ErrorKind::FlowFailure));
}

TEST_CASE("semiconjugacy: dimension mismatch") {
    auto src = one_mode("a", {"-x"}, 1);
    auto dst = one_mode("b", {"-x", "-y"}, 1);
    auto r = validate_semiconjugacy(single(VertexMap::affine(scalar(1), Vec::Zero(1))), src, dst);
    CHECK(r.has(ErrorKind::DimensionMismatch));
}

TEST_CASE("sequential composition of the funnels glues one vertex") {
    auto a = fixture("funnel_a.json");
    auto b = fixture("funnel_b.json");
    auto ab = compose_sequential(a, b);
    CHECK(ab.apex.vertex_count() == a.apex.vertex_count() + b.apex.vertex_count() - a.final_.vertex_count());
    CHECK(ab.apex.edge_count() == a.apex.edge_count() + b.apex.edge_count() - a.final_.edge_count());
    CHECK(ab.initial.modes[0].label == "wide");
    CHECK(ab.final_.modes[0].label == "center");
    CHECK(validate_directed(ab).ok());
    CHECK_THROWS_AS(compose_sequential(b, a), HybridError);
    try {
        compose_sequential(b, a);
    } catch (const HybridError& e) {
        CHECK(e.kind() == ErrorKind::InterfaceMismatch);
    }
}

TEST_CASE("glued edges are transported through the interface maps") {
    // A's final leg scales by 2, B's initial leg by 3: edges into the glued vertex
    // pick up the factor 3/2.
    auto a = fixture("funnel_a.json");
    auto b = fixture("funnel_b.json");
    a.apex.modes[1].domain = Box{Vec::Constant(1, -2.0), Vec::Constant(1, 2.0)};
    a.final_leg.maps[0] = VertexMap::affine(scalar(2), Vec::Zero(1));
    b.apex.modes[0].domain = Box{Vec::Constant(1, -3.0), Vec::Constant(1, 3.0)};
    b.initial_leg.maps[0] = VertexMap::affine(scalar(3), Vec::Zero(1));
    b.apex.edges[0].A = scalar(1.0 / 6.0);
    auto ab = compose_sequential(a, b);
    const Reset* enter = nullptr;
    for (const auto& e : ab.apex.edges)
        if (e.label == "enter") enter = &e;
    REQUIRE(enter);
    CHECK(enter->A(0, 0) == doctest::Approx(0.25 * 1.5));
    CHECK(ab.apex.modes[enter->dst].domain.hi(0) == doctest::Approx(3.0));
}

TEST_CASE("random triples: counts, associativity and unit laws") {
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
        auto t = gen::random_triple(seed);
        auto h12 = compose_sequential(t.h1, t.h2);
        CHECK(h12.apex.vertex_count() == t.h1.apex.vertex_count() + t.h2.apex.vertex_count() - static_cast<int>(t.k1.size()));
        CHECK(h12.apex.edge_count() == t.h1.apex.edge_count() + t.h2.apex.edge_count());
        auto left = compose_sequential(h12, t.h3);
        auto right = compose_sequential(t.h1, compose_sequential(t.h2, t.h3));
        INFO("seed " << seed);
        CHECK(conjugacy_iso_check(left, right));
        CHECK(conjugacy_iso_check(compose_sequential(identity_cospan(t.h1.initial), t.h1), t.h1));
        CHECK(conjugacy_iso_check(compose_sequential(t.h1, identity_cospan(t.h1.final_)), t.h1));
        CHECK(validate_semiconjugacy(left.initial_leg, left.initial, left.apex).ok());
        CHECK(validate_semiconjugacy(left.final_leg, left.final_, left.apex).ok());
    }
}

TEST_CASE("product counts and block-diagonal resets") {
    auto a = fixture("funnel_a.json").apex;
    auto b = fixture("funnel_b.json").apex;
    auto p = product(a, b);
    CHECK(p.vertex_count() == a.vertex_count() * b.vertex_count());
    CHECK(p.edge_count() == a.edge_count() * b.vertex_count() + a.vertex_count() * b.edge_count());
    CHECK(p.modes[1 * b.vertex_count() + 0].label == "k|k");
    CHECK(p.modes[0].dim == 2);
    // Edge (e, v) acts as A_e on the first block and the identity on the second.
    const auto& e = p.edges[0];
    CHECK(e.A(0, 0) == doctest::Approx(0.25));
    CHECK(e.A(1, 1) == doctest::Approx(1.0));
    CHECK(e.A(0, 1) == 0.0);
    Vec x(2);
    x << 0.3, -0.4;
    CHECK(p.modes[0].flow(x)(1) == doctest::Approx(0.4));
}

TEST_CASE("parallel composition: unit and symmetry") {
    auto a = fixture("funnel_a.json");
    auto b = fixture("funnel_b.json");
    auto u = fixture("unit.json");
    CHECK(conjugacy_iso_check(compose_parallel(a, u), a));
    CHECK(conjugacy_iso_check(compose_parallel(u, a), a));
    CHECK(conjugacy_iso_check(compose_parallel(a, b), compose_parallel(b, a)));
    CHECK(!conjugacy_iso_check(compose_parallel(a, b), a));
}

TEST_CASE("iso check: permuted copies and genuine differences") {
    auto ab = compose_sequential(fixture("funnel_a.json"), fixture("funnel_b.json"));
    CHECK(conjugacy_iso_check(ab, permuted(ab, {2, 0, 1})));
    auto other = ab;
    other.apex.modes[0].field = {expr::parse("-2*x")};
    other.initial.modes[0].field = {expr::parse("-2*x")};
    CHECK(!conjugacy_iso_check(ab, other));
    CHECK_THROWS_AS(conjugacy_iso_check(ab, ab, 2), HybridError);
}

TEST_CASE("directed validation: funnels pass, sink violation names the edge") {
    CHECK(validate_directed(fixture("funnel_a.json")).ok());
    auto r = validate_directed(fixture("sink_violation.json"));
    REQUIRE(r.sink.has(ErrorKind::SinkViolation));
    CHECK(r.sink.failures[0].edge == 1);
}

TEST_CASE("directed validation: unreachable mode fails the chain condition") {
    auto d = fixture("funnel_b.json");
    Mode trap = d.apex.modes[0];
    trap.label = "trap";
    d.apex.modes.push_back(trap);
    auto r = validate_directed(d);
    REQUIRE(r.chain.has(ErrorKind::ChainFailure));
    CHECK(r.chain.failures[0].vertex == 2);
    CHECK(r.reached < r.cells);
}

TEST_CASE("directed validation: embedding and invertibility") {
    auto d = fixture("funnel_b.json");
    d.initial.modes.push_back(d.initial.modes[0]);
    d.initial.modes[1].label = "k2";
    d.initial_leg.vertex_map.push_back(0);
    d.initial_leg.maps.push_back(VertexMap::identity(1));
    CHECK(validate_directed(d).embedding.has(ErrorKind::Injectivity));

    auto e = fixture("funnel_b.json");
    e.final_leg.maps[0] = VertexMap::affine(scalar(0.0), Vec::Zero(1));
    auto r = validate_directed(e);
    CHECK(!r.ok());
    CHECK((r.embedding.has(ErrorKind::Injectivity) || r.invertibility.has(ErrorKind::Invertibility)));
}

TEST_CASE("cell graph: OpenMP and serial builds agree") {
    auto h = compose_sequential(fixture("funnel_a.json"), fixture("funnel_b.json")).apex;
    ChainOptions o;
    auto par = build_cell_graph(h, o, true);
    auto ser = build_cell_graph(h, o, false);
    CHECK(par.mode_of == ser.mode_of);
    CHECK(par.succ == ser.succ);
    CHECK(par.first_cell == ser.first_cell);
}

TEST_CASE("cell budget shrinks the grid") {
    auto h = product(fixture("funnel_a.json").apex, fixture("funnel_b.json").apex);
    ChainOptions o;
    o.max_cells_per_mode = 100;
    auto g = build_cell_graph(h, o, true);
    for (int m = 0; m < h.vertex_count(); ++m) CHECK(g.first_cell[m + 1] - g.first_cell[m] <= 100);
}

TEST_CASE("JSON round trip and malformed input") {
    auto ab = compose_sequential(fixture("funnel_a.json"), fixture("funnel_b.json"));
    auto text = serialize(ab);
    auto back = parse_directed(text);
    CHECK(serialize(back) == text);
    CHECK(conjugacy_iso_check(ab, back));
    CHECK_THROWS_AS(parse_directed("{\"apex\": 3}"), HybridError);
    CHECK_THROWS_AS(parse_directed("not json"), HybridError);
}
