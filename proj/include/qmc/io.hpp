#pragma once

// JSON model and density files. Complex entries are [re, im] pairs (plain numbers are read as real);
// matrices are row-major nested arrays.

#include "qmc/model.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

namespace qmc {

using Json = nlohmann::json;

class FileError : public Error {
public:
    using Error::Error;
};

inline constexpr int output_digits = 15;

/// x rounded to 15 significant digits, so that JSON output carries no more than that.
inline double rounded(double x) {
    if (!std::isfinite(x) || x == 0.0) return x;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", output_digits, x);
    return std::strtod(buf, nullptr);
}

inline std::string format_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", output_digits, x);
    return buf;
}

inline Json complex_to_json(Complex z) { return Json::array({rounded(z.real()), rounded(z.imag())}); }

inline Json matrix_to_json(const CMatrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(complex_to_json(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Complex complex_from_json(const Json& j, const std::string& where) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) return {j[0].get<double>(), j[1].get<double>()};
    throw SchemaError(where + ": expected a number or a [re, im] pair");
}

inline CMatrix matrix_from_json(const Json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw SchemaError(where + ": expected a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (!j[0].is_array() || j[0].empty()) throw SchemaError(where + ": rows must be non-empty arrays");
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    CMatrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const Json& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw SchemaError(where + ": row " + std::to_string(r) + " has the wrong length");
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = complex_from_json(row[static_cast<std::size_t>(c)], where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
    return m;
}

namespace detail {

inline void reject_unknown_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw SchemaError(where + ": expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items())
        if (!ok.count(key)) throw SchemaError(where + ": unknown key '" + key + "'");
}

template <typename T>
T required(const Json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw SchemaError(where + ": missing '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw SchemaError(where + ": '" + key + "' has the wrong type");
    }
}

template <typename T>
T optional_value(const Json& j, const char* key, T fallback, const std::string& where) {
    return j.contains(key) ? required<T>(j, key, where) : fallback;
}

inline Json read_json_file(const std::string& path) {
    if (!std::filesystem::exists(path)) throw FileError("file not found: " + path);
    std::ifstream in(path);
    if (!in) throw FileError("cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(path + ": invalid JSON (" + e.what() + ")");
    }
}

}  // namespace detail

inline Block block_from_json(const Json& j, Representation rep, const std::string& where) {
    detail::reject_unknown_keys(j, {"kraus", "matrix"}, where);
    if (j.contains("kraus") == j.contains("matrix")) throw SchemaError(where + ": give exactly one of 'kraus' and 'matrix'");
    if (j.contains("matrix")) return block_from_matrix(matrix_from_json(j["matrix"], where + ".matrix"));
    const Json& list = j["kraus"];
    if (!list.is_array() || list.empty()) throw SchemaError(where + ".kraus: expected a non-empty list of matrices");
    std::vector<CMatrix> effects;
    for (std::size_t k = 0; k < list.size(); ++k)
        effects.push_back(matrix_from_json(list[k], where + ".kraus[" + std::to_string(k) + "]"));
    try {
        return block_from_kraus(std::move(effects), rep);
    } catch (const SchemaError& e) {
        throw SchemaError(where + ": " + e.what());
    }
}

inline Json block_to_json(const Block& b) {
    if (b.has_kraus()) {
        Json list = Json::array();
        for (const auto& k : b.kraus) list.push_back(matrix_to_json(k));
        return Json{{"kraus", list}};
    }
    return Json{{"matrix", matrix_to_json(b.matrix)}};
}

inline SiteBlocks site_blocks_from_json(const Json& j, Representation rep, const std::string& where) {
    SiteBlocks s;
    if (j.contains("A")) s.A = block_from_json(j["A"], rep, where + ".A");
    if (j.contains("B")) s.B = block_from_json(j["B"], rep, where + ".B");
    if (j.contains("C")) s.C = block_from_json(j["C"], rep, where + ".C");
    return s;
}

inline void site_blocks_to_json(const SiteBlocks& s, Json& out) {
    if (s.A) out["A"] = block_to_json(*s.A);
    if (s.B) out["B"] = block_to_json(*s.B);
    if (s.C) out["C"] = block_to_json(*s.C);
}

inline QmcModel model_from_json(const Json& j) {
    const std::string where = "model";
    detail::reject_unknown_keys(j, {"topology", "num_sites", "dim", "mode", "homogeneous", "overrides", "substochastic", "copies"}, where);
    const auto topo_name = detail::required<std::string>(j, "topology", where);
    Topology topo = Topology::half_line();
    if (topo_name == "segment") {
        const int n = detail::required<int>(j, "num_sites", where);
        if (n < 1) throw SchemaError("model: num_sites must be positive");
        topo = Topology::segment(n);
    } else if (topo_name == "half_line") {
        topo = Topology::half_line();
    } else if (topo_name == "line") {
        topo = Topology::line();
    } else {
        throw SchemaError("model: topology must be segment, half_line or line, got '" + topo_name + "'");
    }
    if (topo_name != "segment" && j.contains("num_sites")) throw SchemaError("model: num_sites applies to segments only");
    const int dim = detail::required<int>(j, "dim", where);
    const auto mode_name = detail::optional_value<std::string>(j, "mode", "full", where);
    if (mode_name != "full" && mode_name != "compact") throw SchemaError("model: mode must be full or compact");
    const Representation rep = mode_name == "full" ? Representation::full : Representation::compact;
    const int copies = detail::optional_value<int>(j, "copies", 1, where);

    SiteBlocks hom;
    if (j.contains("homogeneous")) {
        detail::reject_unknown_keys(j["homogeneous"], {"A", "B", "C"}, "model.homogeneous");
        hom = site_blocks_from_json(j["homogeneous"], rep, "model.homogeneous");
    }
    std::map<int, SiteBlocks> ov;
    if (j.contains("overrides")) {
        const Json& list = j["overrides"];
        if (!list.is_array()) throw SchemaError("model.overrides: expected a list");
        for (std::size_t k = 0; k < list.size(); ++k) {
            const std::string w = "model.overrides[" + std::to_string(k) + "]";
            detail::reject_unknown_keys(list[k], {"site", "A", "B", "C"}, w);
            const int site = detail::required<int>(list[k], "site", w);
            if (!topo.contains(site)) throw SchemaError(w + ": site " + std::to_string(site) + " outside topology");
            if (ov.count(site)) throw SchemaError(w + ": site " + std::to_string(site) + " listed twice");
            ov[site] = site_blocks_from_json(list[k], rep, w);
        }
    }
    const bool sub = detail::optional_value<bool>(j, "substochastic", false, where);
    return QmcModel(topo, dim, rep, std::move(hom), std::move(ov), sub, copies);
}

inline Json model_to_json(const QmcModel& m) {
    Json j;
    j["topology"] = m.topology().name();
    if (m.topology().finite()) j["num_sites"] = m.topology().num_sites();
    j["dim"] = m.dim();
    j["mode"] = to_string(m.mode());
    if (m.copies() != 1) j["copies"] = m.copies();
    if (m.has_homogeneous_bulk()) {
        Json h = Json::object();
        site_blocks_to_json(m.homogeneous(), h);
        j["homogeneous"] = h;
    }
    Json ov = Json::array();
    for (const auto& [site, blocks] : m.overrides()) {
        Json o{{"site", site}};
        site_blocks_to_json(blocks, o);
        ov.push_back(std::move(o));
    }
    j["overrides"] = ov;
    j["substochastic"] = m.declared_substochastic();
    return j;
}

inline Density density_from_json(const Json& j) {
    detail::reject_unknown_keys(j, {"matrix"}, "density");
    if (!j.contains("matrix")) throw SchemaError("density: missing 'matrix'");
    return Density(matrix_from_json(j["matrix"], "density.matrix"));
}

inline Json density_to_json(const Density& rho) { return Json{{"matrix", matrix_to_json(rho.matrix())}}; }

inline QmcModel load_model(const std::string& path) {
    try {
        return model_from_json(detail::read_json_file(path));
    } catch (const SchemaError& e) {
        throw SchemaError(path + ": " + e.what());
    }
}

inline Density load_density(const std::string& path) {
    try {
        return density_from_json(detail::read_json_file(path));
    } catch (const SchemaError& e) {
        throw SchemaError(path + ": " + e.what());
    }
}

namespace detail {

inline int array_depth(const Json& j) {
    if (!j.is_array()) return j.is_object() ? 100 : 0;
    int d = 0;
    for (const auto& e : j) d = std::max(d, array_depth(e));
    return d + 1;
}

inline void pretty(const Json& j, std::ostream& os, int indent) {
    const std::string pad(static_cast<std::size_t>(indent + 2), ' '), close(static_cast<std::size_t>(indent), ' ');
    if (j.is_object() && !j.empty()) {
        os << "{\n";
        std::size_t k = 0;
        for (const auto& [key, value] : j.items()) {
            os << pad << Json(key).dump() << ": ";
            pretty(value, os, indent + 2);
            os << (++k < j.size() ? ",\n" : "\n");
        }
        os << close << '}';
    } else if (j.is_array() && !j.empty() && array_depth(j) > 2) {
        os << "[\n";
        for (std::size_t k = 0; k < j.size(); ++k) {
            os << pad;
            pretty(j[k], os, indent + 2);
            os << (k + 1 < j.size() ? ",\n" : "\n");
        }
        os << close << ']';
    } else {
        os << j.dump(-1, ' ', false, Json::error_handler_t::replace);
    }
}

}  // namespace detail

/// Indented JSON with innermost rows (numbers, [re, im] pairs and rows of pairs) kept on one line.
inline std::string dump_pretty(const Json& j) {
    std::ostringstream os;
    detail::pretty(j, os, 0);
    std::string s = os.str();
    for (std::size_t pos = 0; (pos = s.find(",", pos)) != std::string::npos; ++pos)
        if (pos + 1 < s.size() && s[pos + 1] != '\n' && s[pos + 1] != ' ') s.insert(pos + 1, " ");
    return s;
}

inline void write_json_file(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw FileError("cannot write " + path);
    out << dump_pretty(j) << '\n';
}

}  // namespace qmc
