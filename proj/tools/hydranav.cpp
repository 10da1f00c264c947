#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unistd.h>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "hydranav/hybrid.hpp"
#include "hydranav/ltl.hpp"
#include "hydranav/nav.hpp"
#include "hydranav/syntax.hpp"
#include "hydranav/typechecker.hpp"

namespace fs = std::filesystem;
using namespace hydranav;

namespace {

constexpr int kOk = 0, kDomain = 1, kUsage = 2;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot read {}", path));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw IoError(fmt::format("cannot write {}", path));
    out << text;
}

bool use_color() {
    if (const char* v = std::getenv("HYDRANAV_COLOR")) {
        std::string s = v;
        return !(s.empty() || s == "0" || s == "never" || s == "false");
    }
    return isatty(fileno(stderr));
}

std::string error_tag(std::string_view code) {
    return use_color() ? fmt::format("\x1b[1;31merror\x1b[0m[{}]", code) : fmt::format("error[{}]", code);
}

int cmd_check(const std::string& path, bool allow_holes) {
    const std::string src = read_file(path);
    syntax::Module m;
    try {
        m = syntax::parse_module(src);
    } catch (const syntax::SyntaxError& e) {
        std::cerr << fmt::format("{}:{}:{}: {}: {}\n", path, e.loc().line, e.loc().col, error_tag("SyntaxError"),
                                 e.what());
        return kUsage;
    }
    auto report = check::check_decl_file(m, {allow_holes});
    int errors = 0;
    for (const auto& d : report.decls)
        for (const auto& diag : d.diagnostics) {
            std::cerr << check::format_diagnostic(path, diag, use_color()) << "\n";
            ++errors;
        }
    std::cout << fmt::format("{}: {} declarations, {} error{}\n", path, report.decls.size(), errors, errors == 1 ? "" : "s");
    return report.ok() ? kOk : kDomain;
}

int cmd_ltl(const std::string& formula, const std::string& env_path) {
    const std::string env_src = read_file(env_path);
    ltl::AtomEnv env;
    try {
        env = ltl::AtomEnv::from_source(env_src);
    } catch (const syntax::SyntaxError& e) {
        std::cerr << fmt::format("{}:{}:{}: {}: {}\n", env_path, e.loc().line, e.loc().col, error_tag("SyntaxError"),
                                 e.what());
        return kUsage;
    }
    try {
        auto f = ltl::parse_ltl(formula);
        std::cout << syntax::print(ltl::translate_ltl(f, env)) << "\n";
        return kOk;
    } catch (const ltl::UnknownAtom& e) {
        std::cerr << fmt::format("formula:1:{}: {}: {}\n", e.offset() + 1, error_tag("UnknownAtom"), e.what());
    } catch (const ltl::LtlError& e) {
        std::cerr << fmt::format("formula:1:{}: {}: {}\n", e.offset() + 1, error_tag("LtlSyntax"), e.what());
    }
    return kDomain;
}

hybrid::DirectedSystem load_directed(const std::string& path) {
    try {
        return hybrid::parse_directed(read_file(path));
    } catch (const hybrid::HybridError& e) {
        throw IoError(fmt::format("{}: {}", path, e.what()));
    }
}

void print_failures(const char* what, const hybrid::Report& r) {
    for (const auto& f : r.failures) {
        std::string where;
        if (f.vertex >= 0) where += fmt::format(" vertex {}", f.vertex);
        if (f.edge >= 0) where += fmt::format(" edge {}", f.edge);
        std::string wit;
        if (f.witness.size() > 0) {
            wit = " witness [";
            for (int i = 0; i < f.witness.size(); ++i) wit += fmt::format("{}{:.6g}", i ? ", " : "", f.witness(i));
            wit += "]";
        }
        std::cerr << fmt::format("{} {}:{}{}: {}\n", error_tag(hybrid::to_string(f.kind)), what, where, wit, f.message);
    }
}

int cmd_compose(const std::vector<std::string>& files, const std::string& op, bool validate, const std::string& iso_with,
                const std::string& out) {
    std::vector<hybrid::DirectedSystem> systems;
    for (const auto& f : files) systems.push_back(load_directed(f));
    hybrid::DirectedSystem acc = systems.front();
    try {
        for (std::size_t i = 1; i < systems.size(); ++i)
            acc = op == "seq" ? hybrid::compose_sequential(acc, systems[i]) : hybrid::compose_parallel(acc, systems[i]);
    } catch (const hybrid::HybridError& e) {
        std::cerr << fmt::format("{}: {}\n", error_tag(hybrid::to_string(e.kind())), e.what());
        return kDomain;
    }
    write_output(out, hybrid::serialize(acc));
    std::cerr << fmt::format("apex: {} vertices, {} edges\n", acc.apex.vertex_count(), acc.apex.edge_count());
    int rc = kOk;
    if (validate) {
        auto rep = hybrid::validate_directed(acc);
        print_failures("legs", rep.legs);
        print_failures("embedding", rep.embedding);
        print_failures("invertibility", rep.invertibility);
        print_failures("sink", rep.sink);
        print_failures("chain", rep.chain);
        std::cerr << fmt::format("validate: {} ({} of {} cells reach the final foot)\n", rep.ok() ? "ok" : "failed",
                                 rep.reached, rep.cells);
        if (!rep.ok()) rc = kDomain;
    }
    if (!iso_with.empty()) {
        bool iso = false;
        try {
            iso = hybrid::conjugacy_iso_check(acc, load_directed(iso_with));
        } catch (const hybrid::HybridError& e) {
            std::cerr << fmt::format("{}: {}\n", error_tag(hybrid::to_string(e.kind())), e.what());
            return kDomain;
        }
        std::cerr << fmt::format("iso with {}: {}\n", iso_with, iso ? "yes" : "no");
        if (!iso) rc = kDomain;
    }
    return rc;
}

std::vector<std::uint64_t> parse_seeds(const std::string& range) {
    std::vector<std::uint64_t> seeds;
    auto dots = range.find("..");
    try {
        if (dots == std::string::npos) {
            seeds.push_back(std::stoull(range));
        } else {
            auto lo = std::stoull(range.substr(0, dots)), hi = std::stoull(range.substr(dots + 2));
            if (hi < lo) throw CLI::ValidationError("--seeds", "empty range");
            for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
        }
    } catch (const std::logic_error&) {
        throw CLI::ValidationError("--seeds", fmt::format("expected N or A..B, got '{}'", range));
    }
    return seeds;
}

std::string generator_line(const nav::GeneratorParams& gp, bool violation) {
    return fmt::format("generator: kind={} obstacles={}..{} radius=[{}, {}] margin={} size={}",
                       violation ? "violation" : "valid", gp.min_obstacles, gp.max_obstacles, gp.min_radius,
                       gp.max_radius, gp.margin, gp.size);
}

double min_clearance(const nav::RunResult& r) {
    double m = sem::kInf;
    for (const auto& s : r.trace.steps) m = std::min(m, s.min_clearance);
    return m;
}

struct SimOptions {
    std::string world, params, out, seeds;
    std::optional<std::uint64_t> seed;
    bool expect_goal = false, allow_close_start = false, violation = false, serial = false;
};

int cmd_simulate(const SimOptions& o) {
    nav::NavParams p = o.params.empty() ? nav::NavParams{} : nav::load_params(o.params);
    if (o.allow_close_start) p.allow_close_start = true;
    nav::GeneratorParams gp;
    gp.safety_radius = p.safety_radius;

    if (!o.seeds.empty()) {
        auto seeds = parse_seeds(o.seeds);
        if (o.out.empty()) throw CLI::ValidationError("--out", "batch runs need an output directory");
        fs::create_directories(o.out);
        auto items = nav::run_batch(seeds, p, o.violation, !o.serial);
        int success = 0;
        for (const auto& it : items) {
            const auto kind = it.result.outcome.kind;
            const bool ok = o.violation ? kind == nav::OutcomeKind::SeparationViolation
                                        : kind == nav::OutcomeKind::AtGoal && min_clearance(it.result) > p.safety_radius;
            success += ok;
            const auto stem = fmt::format("{}/seed_{}", o.out, it.seed);
            write_output(stem + ".yaml", nav::dump_world(it.world));
            write_output(stem + ".csv",
                         nav::trace_csv(it.result, {fmt::format("seed: {}", it.seed), generator_line(gp, o.violation),
                                                    "params: " + nav::params_line(p),
                                                    fmt::format("world: seed_{}.yaml", it.seed)}));
            std::cout << fmt::format("seed {}: {} after {} steps, min clearance {:.6f}\n", it.seed,
                                     nav::to_string(kind), it.result.trace.steps.size(), min_clearance(it.result));
        }
        std::cout << fmt::format("success {}/{}\n", success, items.size());
        return (o.expect_goal && success != static_cast<int>(items.size())) ? kDomain : kOk;
    }

    nav::World world;
    std::vector<std::string> header;
    if (!o.world.empty()) {
        world = nav::load_world(o.world);
        header.push_back("world: " + o.world);
    } else if (o.seed) {
        world = o.violation ? nav::generate_violation_world(*o.seed, gp) : nav::generate_world(*o.seed, gp);
        header.push_back(fmt::format("seed: {}", *o.seed));
        header.push_back(generator_line(gp, o.violation));
    } else {
        throw CLI::ValidationError("simulate", "give a world file, --seed or --seeds");
    }
    header.push_back("params: " + nav::params_line(p));
    nav::RunResult r;
    try {
        r = nav::run_controller(world, world.start, world.goal, p);
    } catch (const nav::NavError& e) {
        std::cerr << fmt::format("{}: {}\n", error_tag("Hypothesis"), e.what());
        return kDomain;
    }
    write_output(o.out, nav::trace_csv(r, header));
    for (const auto& w : r.trace.warnings) std::cerr << "warning: " << w << "\n";
    std::cerr << fmt::format("outcome: {} after {} steps, min clearance {:.6f}{}\n", nav::to_string(r.outcome.kind),
                             r.trace.steps.size(), min_clearance(r),
                             r.outcome.detail.empty() ? "" : " (" + r.outcome.detail + ")");
    if (o.expect_goal && r.outcome.kind != nav::OutcomeKind::AtGoal) return kDomain;
    return kOk;
}

int cmd_plot(const std::vector<std::string>& traces, const std::string& world_path, const std::string& out) {
    const nav::World world = nav::load_world(world_path);
    std::vector<std::vector<nav::Point>> paths;
    nav::Polygon lf;
    for (const auto& t : traces) {
        auto csv = nav::read_trace_csv(read_file(t));
        paths.push_back(csv.positions);
        if (csv.positions.empty()) continue;
        nav::NavParams p;
        for (const auto& h : csv.header)
            if (h.rfind("params: ", 0) == 0) p = nav::parse_params_line(h.substr(8));
        const auto x = csv.positions.back();
        try {
            auto scan = nav::sense(world, x, p);
            auto per = nav::perceive(scan, x, p);
            std::vector<nav::Point> nearest;
            for (const auto& c : per.circles) nearest.push_back(c.center + c.radius * (x - c.center).normalized());
            nearest.insert(nearest.end(), per.loose_hits.begin(), per.loose_hits.end());
            lf = nav::local_free_space(x, nearest, p, world.goal);
        } catch (const nav::NavError&) {
            lf.clear();
        }
    }
    write_output(out, nav::plot_svg(world, paths, lf));
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hydranav: typed hybrid navigation toolchain"};
    app.require_subcommand(1);

    std::string check_path;
    bool allow_holes = false;
    auto* check = app.add_subcommand("check", "typecheck an .hdt module");
    check->add_option("file", check_path, "module to check")->required();
    check->add_flag("--allow-holes", allow_holes, "accept ?holes");

    std::string formula, env_path;
    auto* ltl = app.add_subcommand("ltl", "translate an LTL formula to a type");
    ltl->add_option("formula", formula, "formula over atoms, \\/, /\\, <>, []")->required();
    ltl->add_option("--env", env_path, ".hdt module whose parameterless type aliases are the atoms")->required();

    std::vector<std::string> files;
    std::string op = "seq", iso_with, compose_out;
    bool validate = false;
    auto* compose = app.add_subcommand("compose", "compose directed hybrid systems (JSON)");
    compose->add_option("files", files, "directed systems, composed left to right")->required();
    compose->add_option("--op", op, "seq or par")->check(CLI::IsMember({"seq", "par"}));
    compose->add_flag("--validate", validate, "check the directed-system conditions of the result");
    compose->add_option("--iso-with", iso_with, "compare the result with this system up to conjugacy");
    compose->add_option("-o,--out", compose_out, "output file (default stdout)");

    SimOptions sim;
    std::uint64_t seed = 0;
    auto* simulate = app.add_subcommand("simulate", "run the navigation controller");
    simulate->add_option("world", sim.world, "world YAML file");
    auto* seed_opt = simulate->add_option("--seed", seed, "generate the world from this seed");
    simulate->add_option("--seeds", sim.seeds, "batch over generated worlds, e.g. 0..49");
    simulate->add_option("--params", sim.params, "parameter YAML file");
    simulate->add_option("-o,--out", sim.out, "trace CSV (directory for --seeds)");
    simulate->add_flag("--expect-goal", sim.expect_goal, "exit 1 unless every run ends AtGoal");
    simulate->add_flag("--allow-close-start", sim.allow_close_start, "warn instead of failing on start clearance <= 2R");
    simulate->add_flag("--violation-worlds", sim.violation, "generate worlds with one pair closer than 2R");
    simulate->add_flag("--serial", sim.serial, "run a batch without OpenMP");

    std::vector<std::string> traces;
    std::string plot_world, plot_out;
    auto* plot = app.add_subcommand("plot", "render traces as SVG");
    plot->add_option("traces", traces, "trace CSV files")->required();
    plot->add_option("--world", plot_world, "world YAML file")->required();
    plot->add_option("-o,--out", plot_out, "SVG file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*check) return cmd_check(check_path, allow_holes);
        if (*ltl) return cmd_ltl(formula, env_path);
        if (*compose) return cmd_compose(files, op, validate, iso_with, compose_out);
        if (*simulate) {
            if (*seed_opt) sim.seed = seed;
            return cmd_simulate(sim);
        }
        if (*plot) return cmd_plot(traces, plot_world, plot_out);
    } catch (const IoError& e) {
        std::cerr << fmt::format("{}: {}\n", error_tag("IO"), e.what());
        return kUsage;
    } catch (const CLI::ValidationError& e) {
        std::cerr << fmt::format("{}: {}\n", error_tag("Usage"), e.what());
        return kUsage;
    } catch (const nav::NavError& e) {
        std::cerr << fmt::format("{}: {}\n", error_tag("Input"), e.what());
        return kUsage;
    } catch (const fs::filesystem_error& e) {
        std::cerr << fmt::format("{}: {}\n", error_tag("IO"), e.what());
        return kUsage;
    }
    return kUsage;
}
