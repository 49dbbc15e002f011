#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dk/kashiwara.hpp"
#include "dk/opmatrix.hpp"
#include "dk/rational.hpp"

namespace dk::io {

using nlohmann::json;

inline constexpr const char* kSchemaVersion = "1";

// ---------------------------------------------------------------------------
// low-level helpers

inline const json& field(const json& j, const char* name) {
    auto it = j.find(name);
    if (it == j.end()) throw ParseError(std::string("missing field '") + name + "'");
    return *it;
}

inline std::int64_t int_field(const json& j, const char* name) {
    const json& v = field(j, name);
    if (!v.is_number_integer())
        throw ParseError(std::string("field '") + name + "' must be an integer");
    return v.get<std::int64_t>();
}

inline std::string string_field(const json& j, const char* name) {
    const json& v = field(j, name);
    if (!v.is_string())
        throw ParseError(std::string("field '") + name + "' must be a string");
    return v.get<std::string>();
}

inline void check_schema(const json& j) {
    std::string v = string_field(j, "schema_version");
    if (v != kSchemaVersion)
        throw SchemaVersionMismatch("unsupported schema_version '" + v + "'");
}

inline json rational_to_json(const Rational& r) {
    return json{{"num", r.num()}, {"den", r.den()}};
}

inline Rational rational_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("rational must be an object {num, den}");
    return Rational(int_field(j, "num"), int_field(j, "den"));
}

inline std::vector<std::string> default_vars(int m) {
    std::vector<std::string> v;
    for (int i = 1; i <= m; ++i) v.push_back("x" + std::to_string(i));
    return v;
}

inline MultiIndex index_from_json(const json& j, int m, const char* what) {
    if (!j.is_array() || static_cast<int>(j.size()) != m)
        throw ParseError(std::string(what) + " must be an array of length M");
    MultiIndex e;
    e.reserve(j.size());
    for (const auto& x : j) {
        if (!x.is_number_integer() || x.get<std::int64_t>() < 0)
            throw ParseError(std::string(what) + " entries must be nonnegative integers");
        e.push_back(static_cast<std::uint32_t>(x.get<std::int64_t>()));
    }
    return e;
}

// ---------------------------------------------------------------------------
// polynomials and operators

inline json poly_terms_to_json(const MultiPoly& f) {
    json arr = json::array();
    for (const auto& [e, c] : f.terms()) {
        json t;
        t["mono"] = e;
        t["val"] = static_cast<std::int64_t>(c.residue());
        arr.push_back(std::move(t));
    }
    return arr;
}

inline MultiPoly poly_terms_from_json(const json& arr, std::int64_t p, int precision,
                                      int var_count) {
    if (!arr.is_array()) throw ParseError("coefficient list must be an array");
    MultiPoly f(p, precision, var_count);
    std::uint64_t mod = detail::pow_checked(p, precision);
    for (const auto& t : arr) {
        MultiIndex e = index_from_json(field(t, "mono"), var_count, "mono");
        std::int64_t v = int_field(t, "val");
        if (v < 0 || static_cast<std::uint64_t>(v) >= mod)
            throw ParseError("val out of range [0, p^N)");
        f.add_term(e, PadicScalar(p, precision, v));
    }
    return f;
}

inline json op_terms_to_json(const DiffOp& P) {
    json arr = json::array();
    for (const auto& [nu, a] : P.terms()) {
        json t;
        t["nu"] = nu;
        t["coeff"] = poly_terms_to_json(a);
        arr.push_back(std::move(t));
    }
    return arr;
}

inline DiffOp op_terms_from_json(const json& arr, std::int64_t p, int precision,
                                 int var_count) {
    if (!arr.is_array()) throw ParseError("terms must be an array");
    DiffOp P(p, precision, var_count);
    for (const auto& t : arr) {
        MultiIndex nu = index_from_json(field(t, "nu"), var_count, "nu");
        P.add_term(nu, poly_terms_from_json(field(t, "coeff"), p, precision, var_count));
    }
    return P;
}

struct OperatorDocument {
    std::vector<std::string> vars;
    DiffOp op;
};

inline json to_json(const OperatorDocument& d) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "operator";
    j["p"] = d.op.prime();
    j["precision"] = d.op.precision();
    j["vars"] = d.vars;
    j["terms"] = op_terms_to_json(d.op);
    return j;
}

inline std::vector<std::string> vars_from_json(const json& j) {
    const json& v = field(j, "vars");
    if (!v.is_array() || v.empty()) throw ParseError("vars must be a nonempty array");
    std::vector<std::string> out;
    for (const auto& s : v) {
        if (!s.is_string()) throw ParseError("vars entries must be strings");
        out.push_back(s.get<std::string>());
    }
    return out;
}

inline OperatorDocument operator_from_json(const json& j) {
    check_schema(j);
    if (string_field(j, "kind") != "operator") throw ParseError("expected kind 'operator'");
    std::int64_t p = int_field(j, "p");
    int N = static_cast<int>(int_field(j, "precision"));
    auto vars = vars_from_json(j);
    DiffOp op = op_terms_from_json(field(j, "terms"), p, N, static_cast<int>(vars.size()));
    return OperatorDocument{std::move(vars), std::move(op)};
}

struct PolynomialDocument {
    std::vector<std::string> vars;
    MultiPoly poly;
};

inline json to_json(const PolynomialDocument& d) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "polynomial";
    j["p"] = d.poly.prime();
    j["precision"] = d.poly.precision();
    j["vars"] = d.vars;
    j["terms"] = poly_terms_to_json(d.poly);
    return j;
}

inline PolynomialDocument polynomial_from_json(const json& j) {
    check_schema(j);
    if (string_field(j, "kind") != "polynomial")
        throw ParseError("expected kind 'polynomial'");
    std::int64_t p = int_field(j, "p");
    int N = static_cast<int>(int_field(j, "precision"));
    auto vars = vars_from_json(j);
    MultiPoly f =
        poly_terms_from_json(field(j, "terms"), p, N, static_cast<int>(vars.size()));
    return PolynomialDocument{std::move(vars), std::move(f)};
}

struct MatrixDocument {
    std::vector<std::string> vars;
    OpMatrix mat;
};

inline json to_json(const MatrixDocument& d) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "operator_matrix";
    j["p"] = d.mat.prime();
    j["precision"] = d.mat.precision();
    j["size"] = d.mat.size();
    j["vars"] = d.vars;
    json rows = json::array();
    for (int i = 0; i < d.mat.size(); ++i) {
        json row = json::array();
        for (int k = 0; k < d.mat.size(); ++k) row.push_back(op_terms_to_json(d.mat.at(i, k)));
        rows.push_back(std::move(row));
    }
    j["entries"] = std::move(rows);
    return j;
}

inline MatrixDocument matrix_from_json(const json& j) {
    check_schema(j);
    if (string_field(j, "kind") != "operator_matrix")
        throw ParseError("expected kind 'operator_matrix'");
    std::int64_t p = int_field(j, "p");
    int N = static_cast<int>(int_field(j, "precision"));
    int n = static_cast<int>(int_field(j, "size"));
    auto vars = vars_from_json(j);
    int M = static_cast<int>(vars.size());
    const json& rows = field(j, "entries");
    if (!rows.is_array() || static_cast<int>(rows.size()) != n)
        throw ParseError("entries must be an n x n array");
    OpMatrix mat(n, p, N, M);
    for (int i = 0; i < n; ++i) {
        const json& row = rows[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<int>(row.size()) != n)
            throw ParseError("entries must be an n x n array");
        for (int k = 0; k < n; ++k)
            mat.at(i, k) = op_terms_from_json(row[static_cast<std::size_t>(k)], p, N, M);
    }
    return MatrixDocument{std::move(vars), std::move(mat)};
}

// ---------------------------------------------------------------------------
// presentations and induced elements

struct PresentationDocument {
    std::vector<std::string> vars;
    FinPresentation pres;
};

inline json to_json(const PresentationDocument& d) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "presentation";
    j["p"] = d.pres.prime;
    j["precision"] = d.pres.precision;
    j["vars"] = d.vars;
    j["generators"] = d.pres.generators;
    json rel = json::array();
    for (const auto& row : d.pres.relations) {
        json r = json::array();
        for (const auto& e : row) r.push_back(op_terms_to_json(e));
        rel.push_back(std::move(r));
    }
    j["relations"] = std::move(rel);
    return j;
}

inline PresentationDocument presentation_from_json(const json& j) {
    check_schema(j);
    if (string_field(j, "kind") != "presentation")
        throw ParseError("expected kind 'presentation'");
    std::int64_t p = int_field(j, "p");
    int N = static_cast<int>(int_field(j, "precision"));
    auto vars = vars_from_json(j);
    int b = static_cast<int>(int_field(j, "generators"));
    FinPresentation pres(p, N, static_cast<int>(vars.size()), b);
    const json& rel = field(j, "relations");
    if (!rel.is_array()) throw ParseError("relations must be an array");
    for (const auto& r : rel) {
        if (!r.is_array() || static_cast<int>(r.size()) != b)
            throw ParseError("relation rows must have one entry per generator");
        std::vector<DiffOp> row;
        for (const auto& e : r)
            row.push_back(op_terms_from_json(e, p, N, static_cast<int>(vars.size())));
        pres.add_relation(std::move(row));
    }
    return PresentationDocument{std::move(vars), std::move(pres)};
}

inline json induced_to_json(const InducedElement& x) {
    json j;
    j["generators"] = x.generators();
    json arr = json::array();
    for (const auto& [key, c] : x.terms()) {
        json t;
        t["gen"] = key.first;
        t["nu"] = key.second;
        t["coeff"] = op_terms_to_json(c);
        arr.push_back(std::move(t));
    }
    j["terms"] = std::move(arr);
    return j;
}

inline InducedElement induced_from_json(const json& j, const Chart& chart) {
    int gens = static_cast<int>(int_field(j, "generators"));
    InducedElement x(chart.prime, chart.precision, chart.tangential, chart.transverse(),
                     gens);
    const json& arr = field(j, "terms");
    if (!arr.is_array()) throw ParseError("terms must be an array");
    for (const auto& t : arr) {
        int gen = static_cast<int>(int_field(t, "gen"));
        MultiIndex nu = index_from_json(field(t, "nu"), chart.transverse(), "nu");
        DiffOp c = op_terms_from_json(field(t, "coeff"), chart.prime, chart.precision,
                                      chart.tangential);
        x.add_term(gen, nu, c);
    }
    return x;
}

struct InducedCollectionDocument {
    Chart chart;
    std::vector<InducedElement> elements;
};

inline json to_json(const InducedCollectionDocument& d) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "induced_collection";
    j["p"] = d.chart.prime;
    j["precision"] = d.chart.precision;
    j["total_vars"] = d.chart.total_vars;
    j["tangential"] = d.chart.tangential;
    json arr = json::array();
    for (const auto& x : d.elements) arr.push_back(induced_to_json(x));
    j["elements"] = std::move(arr);
    return j;
}

inline InducedCollectionDocument induced_collection_from_json(const json& j) {
    check_schema(j);
    if (string_field(j, "kind") != "induced_collection")
        throw ParseError("expected kind 'induced_collection'");
    Chart chart(static_cast<int>(int_field(j, "total_vars")),
                static_cast<int>(int_field(j, "tangential")), int_field(j, "p"),
                static_cast<int>(int_field(j, "precision")));
    std::vector<InducedElement> xs;
    const json& arr = field(j, "elements");
    if (!arr.is_array()) throw ParseError("elements must be an array");
    for (const auto& e : arr) xs.push_back(induced_from_json(e, chart));
    return InducedCollectionDocument{chart, std::move(xs)};
}

// ---------------------------------------------------------------------------
// certificates

struct Claim {
    std::string name;
    int modulus_exponent = 0;
};

/// Self-contained verification document: embeds its inputs so that the
/// checker never needs to re-run the producer.
struct CertificateDocument {
    std::string kind; // "keylemma" | "beta" | "roundtrip" | "normalizer"
    json inputs = json::object();
    std::vector<Claim> claims;
    bool verdict = false;
    json trace_summary = json::object();
};

inline json to_json(const CertificateDocument& d) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = d.kind;
    j["inputs"] = d.inputs;
    json cl = json::array();
    for (const auto& c : d.claims)
        cl.push_back(json{{"name", c.name}, {"modulus_exponent", c.modulus_exponent}});
    j["claims"] = std::move(cl);
    j["verdict"] = d.verdict;
    j["trace_summary"] = d.trace_summary;
    return j;
}

inline CertificateDocument certificate_from_json(const json& j) {
    check_schema(j);
    CertificateDocument d;
    d.kind = string_field(j, "kind");
    if (d.kind != "keylemma" && d.kind != "beta" && d.kind != "roundtrip" &&
        d.kind != "normalizer")
        throw ParseError("unknown certificate kind '" + d.kind + "'");
    d.inputs = field(j, "inputs");
    const json& cl = field(j, "claims");
    if (!cl.is_array()) throw ParseError("claims must be an array");
    for (const auto& c : cl)
        d.claims.push_back(
            Claim{string_field(c, "name"), static_cast<int>(int_field(c, "modulus_exponent"))});
    const json& v = field(j, "verdict");
    if (!v.is_boolean()) throw ParseError("verdict must be a boolean");
    d.verdict = v.get<bool>();
    if (j.contains("trace_summary")) d.trace_summary = j["trace_summary"];
    return d;
}

// ---------------------------------------------------------------------------
// files

inline json parse_text(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ParseError("malformed JSON");
    return j;
}

inline json read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return parse_text(text);
}

inline std::string canonical_text(const json& j) { return j.dump(2) + "\n"; }

/// Write-to-temp then rename, so readers never observe a torn file.
inline void write_file(const std::string& path, const json& j) {
    namespace fs = std::filesystem;
    fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
        out << canonical_text(j);
        if (!out) throw Error("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

} // namespace dk::io
