#include <fstream>
#include <random>

#include <doctest.h>

#include "common.hpp"
#include "hydranav/ltl.hpp"
#include "hydranav/typechecker.hpp"

using namespace hydranav;
using namespace hydranav::ltl;
namespace mk = syntax::make;

namespace {

const AtomEnv& env() {
    static const AtomEnv e = AtomEnv::from_source(read_text("corpus/nav.env"));
    return e;
}

std::string translated(std::string_view f) { return syntax::print(translate_ltl(parse_ltl(f), env())); }

// Size of the translation computed from the table directly.
std::size_t expected_size(const FormulaPtr& f) {
    switch (f->kind) {
    case Kind::Atom: return syntax::node_count(env().atoms.find(f->name)->second);
    case Kind::Or:
    case Kind::And: return 1 + expected_size(f->left) + expected_size(f->right);
    case Kind::Eventually: return 2 + expected_size(f->left);
    case Kind::Always: return expected_size(f->left);
    }
    return 0;
}

std::string random_formula(std::mt19937& rng, int depth) {
    static const char* atoms[] = {"at_goal", "home", "safe", "sees", "idle", "violated", "separated"};
    if (depth == 0 || rng() % 4 == 0) return atoms[rng() % 7];
    switch (rng() % 4) {
    case 0: return "<> " + random_formula(rng, depth - 1);
    case 1: return "[] " + random_formula(rng, depth - 1);
    case 2: return "(" + random_formula(rng, depth - 1) + " \\/ " + random_formula(rng, depth - 1) + ")";
    default: return "(" + random_formula(rng, depth - 1) + " /\\ " + random_formula(rng, depth - 1) + ")";
    }
}

std::size_t error_offset(std::string_view text) {
    try {
        parse_ltl(text);
    } catch (const LtlError& e) {
        return e.offset();
    }
    return std::string::npos;
}

} // namespace

TEST_CASE("parsing: precedence and associativity") {
    auto f = parse_ltl("a \\/ b /\\ c");
    REQUIRE(f->kind == Kind::Or);
    CHECK(f->right->kind == Kind::And);
    auto g = parse_ltl("a /\\ b /\\ c");
    CHECK(g->right->kind == Kind::And);
    auto h = parse_ltl("<> a /\\ [] b");
    REQUIRE(h->kind == Kind::And);
    CHECK(h->left->kind == Kind::Eventually);
    CHECK(h->right->kind == Kind::Always);
    CHECK(parse_ltl("  x")->offset == 2);
}

TEST_CASE("parsing: errors carry offsets") {
    CHECK(error_offset("a \\/") == 4);
    CHECK(error_offset(" (a") == 1);
    CHECK(error_offset("(a b") == 3);
    CHECK(error_offset("a b") == 2);
    CHECK(error_offset("a & b") == 2);
    try {
        parse_ltl("a U b");
        FAIL("expected an error");
    } catch (const LtlError& e) {
        CHECK(e.offset() == 2);
        CHECK(std::string(e.what()).find("unsupported operator 'U'") != std::string::npos);
    }
}

TEST_CASE("print and parse agree on random formulas") {
    std::mt19937 rng(41);
    for (int t = 0; t < 200; ++t) {
        auto f = parse_ltl(random_formula(rng, 4));
        auto again = parse_ltl(print(f));
        CHECK(print(again) == print(f));
        CHECK(node_count(again) == node_count(f));
    }
}

TEST_CASE("atoms come from parameterless aliases") {
    const auto& e = env();
    CHECK(e.atoms.size() == 7);
    CHECK(e.atoms.count("at_goal") == 1);
    CHECK(e.atoms.count("Clearance") == 0);
    auto bad = AtomEnv::from_source("type p(k : Nat) = See(k) ;\ntype q = Unit ;\n");
    CHECK(bad.atoms.size() == 1);
}

TEST_CASE("unknown atoms are reported with their position") {
    try {
        translate_ltl(parse_ltl("at_goal \\/ <> nowhere"), env());
        FAIL("expected UnknownAtom");
    } catch (const UnknownAtom& e) {
        CHECK(e.name() == "nowhere");
        CHECK(e.offset() == 14);
    }
}

TEST_CASE("golden translations") {
    std::ifstream in(source_path("tests/fixtures/ltl/golden.txt"));
    std::string line;
    int cases = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto sep = line.find(" ==> ");
        REQUIRE(sep != std::string::npos);
        INFO(line);
        CHECK(translated(line.substr(0, sep)) == line.substr(sep + 5));
        ++cases;
    }
    CHECK(cases == 20);
}

TEST_CASE("translation size is linear in the formula") {
    std::mt19937 rng(8);
    std::size_t max_atom = 0;
    for (const auto& [name, t] : env().atoms) max_atom = std::max(max_atom, syntax::node_count(t));
    for (int t = 0; t < 200; ++t) {
        auto f = parse_ltl(random_formula(rng, 5));
        auto ty = translate_ltl(f, env());
        CHECK(syntax::node_count(ty) == expected_size(f));
        CHECK(syntax::node_count(ty) <= (max_atom + 2) * node_count(f));
    }
}

TEST_CASE("always is idempotent under translation") {
    std::mt19937 rng(13);
    for (int t = 0; t < 50; ++t) {
        auto f = random_formula(rng, 3);
        auto once = translate_ltl(parse_ltl("[] (" + f + ")"), env());
        auto twice = translate_ltl(parse_ltl("[] [] (" + f + ")"), env());
        CHECK(syntax::equal(once, twice));
    }
}

TEST_CASE("every translation is well formed in the atom environment") {
    std::mt19937 rng(23);
    const auto base = read_text("corpus/nav.env");
    std::string src = base;
    for (int t = 0; t < 30; ++t) src += "goal" + std::to_string(t) + " : " + translated(random_formula(rng, 3)) + " ;\n";
    auto r = check::check_decl_file(syntax::parse_module(src), {false});
    CHECK(r.ok());
}

TEST_CASE("controller type: translation plus the hand rearrangement") {
    const std::string source = "separated \\/ (<> at_goal /\\ [] safe)";
    auto t = translate_ltl(parse_ltl(source), env());
    REQUIRE(t->kind == syntax::TypeKind::Sum);
    const auto& separated = t->kids[0];
    const auto& right = t->kids[1];
    REQUIRE(right->kind == syntax::TypeKind::LinTensor);
    const auto& eventually = right->kids[0];
    const auto& safe = right->kids[1];
    REQUIRE(eventually->kind == syntax::TypeKind::LinPi);

    auto violated = env().atoms.find("violated")->second;
    auto step1 = mk::lin_pi("", eventually->kids[0], mk::sum(eventually->kids[1], violated));
    auto step2 = mk::tensor("c", step1, safe);
    auto step3 = mk::param_pi("", mk::prop("Clearance", {mk::var("x0")}), mk::sum(separated, step2));

    auto fixture = syntax::parse_module(read_text("corpus/nav.env") + read_text("tests/fixtures/ltl/controller.hdt"));
    const syntax::Decl& decl = fixture.decls.back();
    REQUIRE(decl.name == "controllerType");
    CHECK(syntax::alpha_equal(step3, decl.type));
    CHECK(check::check_decl_file(fixture, {false}).ok());
}
