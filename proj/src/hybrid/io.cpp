#include <fmt/format.h>
#include <json.hpp>

#include "hydranav/hybrid.hpp"

namespace hydranav::hybrid {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& msg) { throw HybridError(ErrorKind::DimensionMismatch, msg); }

Mat read_matrix(const json& j, int rows, int cols, std::string_view what) {
    Mat m(rows, cols);
    if (!j.is_array() || static_cast<int>(j.size()) != rows) bad(fmt::format("{}: expected {} rows", what, rows));
    for (int i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<int>(row.size()) != cols)
            bad(fmt::format("{}: row {} should have {} entries", what, i, cols));
        for (int k = 0; k < cols; ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
    return m;
}

Vec read_vector(const json& j, int n, std::string_view what) {
    if (!j.is_array() || static_cast<int>(j.size()) != n) bad(fmt::format("{}: expected {} entries", what, n));
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
    return v;
}

HybridSystem read_system(const json& j, std::string_view what) {
    HybridSystem h;
    for (const auto& jm : j.at("modes")) {
        Mode m;
        m.label = jm.value("label", "");
        const auto& dom = jm.at("domain");
        m.dim = static_cast<int>(dom.size());
        m.domain.lo.resize(m.dim);
        m.domain.hi.resize(m.dim);
        for (int i = 0; i < m.dim; ++i) {
            m.domain.lo(i) = dom[static_cast<std::size_t>(i)].at(0).get<double>();
            m.domain.hi(i) = dom[static_cast<std::size_t>(i)].at(1).get<double>();
        }
        for (const auto& f : jm.at("field")) m.field.push_back(expr::parse(f.get<std::string>()));
        h.modes.push_back(std::move(m));
    }
    if (j.contains("edges"))
        for (const auto& je : j.at("edges")) {
            Reset r;
            r.label = je.value("label", "");
            r.src = je.at("src").get<int>();
            r.dst = je.at("dst").get<int>();
            if (r.src < 0 || r.dst < 0 || r.src >= h.vertex_count() || r.dst >= h.vertex_count())
                bad(fmt::format("{}: edge {} -> {} names a missing vertex", what, r.src, r.dst));
            int ds = h.modes[static_cast<std::size_t>(r.src)].dim, dd = h.modes[static_cast<std::size_t>(r.dst)].dim;
            r.A = read_matrix(je.at("A"), dd, ds, fmt::format("{} edge reset", what));
            r.b = read_vector(je.at("b"), dd, fmt::format("{} edge offset", what));
            h.edges.push_back(std::move(r));
        }
    h.validate();
    return h;
}

Semiconjugacy read_leg(const json& j, const HybridSystem& foot, const HybridSystem& apex, std::string_view what) {
    Semiconjugacy s;
    s.vertex_map = j.at("vertices").get<std::vector<int>>();
    s.edge_map = j.value("edges", std::vector<int>{});
    if (static_cast<int>(s.vertex_map.size()) != foot.vertex_count())
        bad(fmt::format("{}: vertex map has {} entries, foot has {} vertices", what, s.vertex_map.size(),
                        foot.vertex_count()));
    for (int w : s.vertex_map)
        if (w < 0 || w >= apex.vertex_count()) bad(fmt::format("{}: vertex map names missing apex vertex {}", what, w));
    const auto& maps = j.at("maps");
    if (static_cast<int>(maps.size()) != foot.vertex_count()) bad(fmt::format("{}: need one map per foot vertex", what));
    for (int k = 0; k < foot.vertex_count(); ++k) {
        const auto& jm = maps[static_cast<std::size_t>(k)];
        int din = foot.modes[static_cast<std::size_t>(k)].dim;
        int dout = apex.modes[static_cast<std::size_t>(s.vertex_map[static_cast<std::size_t>(k)])].dim;
        if (jm.contains("exprs")) {
            VertexMap m;
            m.A = Mat::Zero(dout, din);
            m.b = Vec::Zero(dout);
            for (const auto& e : jm.at("exprs")) m.exprs.push_back(expr::parse(e.get<std::string>()));
            if (static_cast<int>(m.exprs.size()) != dout) bad(fmt::format("{}: map {} needs {} components", what, k, dout));
            s.maps.push_back(std::move(m));
        } else {
            s.maps.push_back(VertexMap::affine(read_matrix(jm.at("A"), dout, din, what), read_vector(jm.at("b"), dout, what)));
        }
    }
    return s;
}

json write_matrix(const Mat& m) {
    json j = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        j.push_back(row);
    }
    return j;
}

json write_vector(const Vec& v) {
    json j = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
    return j;
}

json write_system(const HybridSystem& h) {
    json modes = json::array(), edges = json::array();
    for (const auto& m : h.modes) {
        json dom = json::array(), field = json::array();
        for (int i = 0; i < m.dim; ++i) dom.push_back({m.domain.lo(i), m.domain.hi(i)});
        for (const auto& f : m.field) field.push_back(expr::print(f));
        modes.push_back({{"label", m.label}, {"domain", dom}, {"field", field}});
    }
    for (const auto& r : h.edges)
        edges.push_back({{"label", r.label}, {"src", r.src}, {"dst", r.dst}, {"A", write_matrix(r.A)}, {"b", write_vector(r.b)}});
    return {{"modes", modes}, {"edges", edges}};
}

json write_leg(const Semiconjugacy& s) {
    json maps = json::array();
    for (const auto& m : s.maps) {
        if (m.is_affine()) {
            maps.push_back({{"A", write_matrix(m.A)}, {"b", write_vector(m.b)}});
        } else {
            json es = json::array();
            for (const auto& e : m.exprs) es.push_back(expr::print(e));
            maps.push_back({{"exprs", es}});
        }
    }
    return {{"vertices", s.vertex_map}, {"edges", s.edge_map}, {"maps", maps}};
}

} // namespace

DirectedSystem parse_directed(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        bad(fmt::format("malformed system document: {}", e.what()));
    }
    try {
        DirectedSystem d;
        d.apex = read_system(j.at("apex"), "apex");
        d.initial = read_system(j.at("initial"), "initial");
        d.final_ = read_system(j.at("final"), "final");
        d.initial_leg = read_leg(j.at("initial_leg"), d.initial, d.apex, "initial_leg");
        d.final_leg = read_leg(j.at("final_leg"), d.final_, d.apex, "final_leg");
        return d;
    } catch (const json::exception& e) {
        bad(fmt::format("malformed system document: {}", e.what()));
    } catch (const expr::ParseError& e) {
        bad(fmt::format("bad field expression: {}", e.what()));
    }
}

std::string serialize(const DirectedSystem& d) {
    json j = {{"apex", write_system(d.apex)},
              {"initial", write_system(d.initial)},
              {"final", write_system(d.final_)},
              {"initial_leg", write_leg(d.initial_leg)},
              {"final_leg", write_leg(d.final_leg)}};
    return j.dump(2) + "\n";
}

} // namespace hydranav::hybrid
