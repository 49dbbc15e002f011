#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dk/io.hpp"
#include "dk/opmatrix.hpp"

// Independent certificate checker. Every claim is recomputed from the
// documents embedded in the certificate using operator arithmetic only; the
// chart-level reductions (ideal membership, restriction, kernel shifts) are
// reimplemented here rather than shared with the producing modules, so a bug
// in a producer cannot silently validate its own output.

namespace dk::verify {

struct Outcome {
    bool ok = true;
    std::vector<std::string> failures;

    void fail(const std::string& what) {
        ok = false;
        failures.push_back(what);
    }
};

namespace detail {

inline std::int64_t int_pow(std::int64_t p, int m) {
    std::int64_t r = 1;
    for (int i = 0; i < m; ++i) r *= p;
    return r;
}

inline bool poly_in_transverse_ideal(const MultiPoly& f, int tangential) {
    for (const auto& [e, c] : f.terms()) {
        bool hit = false;
        for (int j = tangential; j < f.var_count(); ++j)
            if (e[static_cast<std::size_t>(j)] > 0) {
                hit = true;
                break;
            }
        if (!hit) return false;
    }
    return true;
}

inline bool op_in_right_ideal(const DiffOp& P, int tangential) {
    for (const auto& [nu, a] : P.terms())
        if (!poly_in_transverse_ideal(a, tangential)) return false;
    return true;
}

inline bool normalizer_criterion(const DiffOp& P, int tangential) {
    for (int j = tangential; j < P.var_count(); ++j) {
        DiffOp tj = DiffOp::coordinate(P.prime(), P.precision(), P.var_count(), j);
        if (!op_in_right_ideal(compose(P, tj), tangential)) return false;
    }
    return true;
}

inline DiffOp project_to_subspace(const DiffOp& P, int tangential) {
    DiffOp out(P.prime(), P.precision(), tangential);
    for (const auto& [nu, a] : P.terms()) {
        bool tangential_nu = true;
        for (int j = tangential; j < P.var_count(); ++j)
            if (nu[static_cast<std::size_t>(j)] > 0) {
                tangential_nu = false;
                break;
            }
        if (!tangential_nu) continue;
        MultiPoly coeff(P.prime(), P.precision(), tangential);
        for (const auto& [e, c] : a.terms()) {
            bool in_ideal = false;
            for (int j = tangential; j < P.var_count(); ++j)
                if (e[static_cast<std::size_t>(j)] > 0) {
                    in_ideal = true;
                    break;
                }
            if (!in_ideal)
                coeff.add_term(MultiIndex(e.begin(), e.begin() + tangential), c);
        }
        out.add_term(MultiIndex(nu.begin(), nu.begin() + tangential), coeff);
    }
    return out;
}

inline MultiPoly project_poly(const MultiPoly& u, int tangential) {
    MultiPoly out(u.prime(), u.precision(), tangential);
    for (const auto& [e, c] : u.terms()) {
        bool in_ideal = false;
        for (int j = tangential; j < u.var_count(); ++j)
            if (e[static_cast<std::size_t>(j)] > 0) {
                in_ideal = true;
                break;
            }
        if (!in_ideal) out.add_term(MultiIndex(e.begin(), e.begin() + tangential), c);
    }
    return out;
}

/// Shift the transverse divided-power index down by one in slot j; the local
/// model of the coordinate action on induced elements.
inline InducedElement shift_down(const InducedElement& x, int j) {
    InducedElement out(x.prime(), x.precision(), x.tangential(), x.transverse(),
                       x.generators());
    for (const auto& [key, c] : x.terms()) {
        if (key.second[static_cast<std::size_t>(j)] == 0) continue;
        MultiIndex down = key.second;
        --down[static_cast<std::size_t>(j)];
        out.add_term(key.first, down, c);
    }
    return out;
}

inline bool killed_by_all_shifts(const InducedElement& x) {
    for (int j = 0; j < x.transverse(); ++j)
        if (!shift_down(x, j).is_zero()) return false;
    return true;
}

inline std::vector<std::size_t> kernel_indices(const std::vector<InducedElement>& xs) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (!xs[i].is_zero() && killed_by_all_shifts(xs[i])) out.push_back(i);
    return out;
}

inline bool origin_supported(const InducedElement& x) {
    for (const auto& [key, c] : x.terms())
        if (mi_degree(key.second) != 0) return false;
    return true;
}

inline InducedElement conjugate_element(const InducedElement& x, const MultiPoly& ubar) {
    InducedElement out(x.prime(), x.precision(), x.tangential(), x.transverse(),
                       x.generators());
    for (const auto& [key, c] : x.terms())
        out.add_term(key.first, key.second, c.conjugate(ubar));
    return out;
}

inline bool roundtrip_verdict(const std::vector<InducedElement>& xs) {
    auto kernel = kernel_indices(xs);
    std::vector<std::size_t> origin;
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (!xs[i].is_zero() && origin_supported(xs[i])) origin.push_back(i);
    return kernel == origin;
}

} // namespace detail

inline void check_keylemma(const io::CertificateDocument& cert, Outcome& out) {
    auto Rdoc = io::matrix_from_json(io::field(cert.inputs, "R"));
    auto Pdoc = io::matrix_from_json(io::field(cert.inputs, "P"));
    int m = static_cast<int>(io::int_field(cert.inputs, "m"));
    int L = static_cast<int>(io::int_field(cert.inputs, "L"));
    const OpMatrix& R = Rdoc.mat;
    const OpMatrix& P = Pdoc.mat;
    if (m < 1) out.fail("keylemma: level m < 1");
    if (L < 1 || L > P.precision()) out.fail("keylemma: exponent L out of range");
    if (!cert.verdict) out.fail("keylemma: certificate must assert success");
    const std::int64_t p = P.prime();
    OpMatrix I = OpMatrix::identity(P.size(), p, P.precision(), P.var_count());
    if (!congruent_mod(P, I, 1)) out.fail("identity_mod_p: P is not unipotent mod p");
    OpMatrix T = OpMatrix::scalar(
        P.size(), DiffOp::coordinate(p, P.precision(), P.var_count(), P.var_count() - 1,
                                     static_cast<std::uint32_t>(detail::int_pow(p, m))));
    OpMatrix rhs = T - R.times_p_pow(1).reduced_to(P.precision());
    if (!congruent_mod(T * P, P * rhs, L))
        out.fail("intertwine_mod_p_L: congruence fails at exponent " + std::to_string(L));
    bool saw_identity = false, saw_intertwine = false;
    for (const auto& c : cert.claims) {
        if (c.name == "identity_mod_p") {
            saw_identity = true;
            if (c.modulus_exponent != 1) out.fail("identity_mod_p: wrong modulus exponent");
        } else if (c.name == "intertwine_mod_p_L") {
            saw_intertwine = true;
            if (c.modulus_exponent != L) out.fail("intertwine_mod_p_L: wrong modulus exponent");
        } else {
            out.fail("unknown claim '" + c.name + "'");
        }
    }
    if (!saw_identity || !saw_intertwine) out.fail("keylemma: missing claims");
}

inline void check_beta(const io::CertificateDocument& cert, Outcome& out) {
    const io::json& opdoc = io::field(cert.inputs, "operator");
    Rational beta = io::rational_from_json(io::field(cert.inputs, "beta"));
    std::string kind = io::string_field(opdoc, "kind");

    auto reduction_order_of = [&](int l) -> std::optional<std::int64_t> {
        if (kind == "operator_matrix") return io::matrix_from_json(opdoc).mat.reduction_order(l);
        return io::operator_from_json(opdoc).op.reduction_order(l);
    };
    int precision = static_cast<int>(io::int_field(opdoc, "precision"));

    const io::json& levels = io::field(cert.trace_summary, "per_level");
    if (!levels.is_array() || static_cast<int>(levels.size()) != precision) {
        out.fail("per_level_orders: wrong number of recorded levels");
        return;
    }
    bool expected_verdict = true;
    for (const auto& row : levels) {
        int l = static_cast<int>(io::int_field(row, "level"));
        if (l < 0 || l >= precision) {
            out.fail("per_level_orders: level out of range");
            return;
        }
        auto ord = reduction_order_of(l);
        const io::json& rec = io::field(row, "ord");
        if (ord) {
            if (!rec.is_number_integer() || rec.get<std::int64_t>() != *ord)
                out.fail("per_level_orders: mismatch at level " + std::to_string(l));
            if (Rational(*ord) > beta * Rational(l + 1)) expected_verdict = false;
        } else if (!rec.is_null()) {
            out.fail("per_level_orders: level " + std::to_string(l) + " should be empty");
        }
    }
    if (expected_verdict != cert.verdict)
        out.fail("verdict_consistent: recorded verdict contradicts the recomputation");
}

inline void check_normalizer(const io::CertificateDocument& cert, Outcome& out) {
    auto opdoc = io::operator_from_json(io::field(cert.inputs, "operator"));
    int tangential = static_cast<int>(io::int_field(cert.inputs, "tangential"));
    if (tangential < 0 || tangential >= opdoc.op.var_count()) {
        out.fail("normalizer: tangential count out of range");
        return;
    }
    bool verdict = detail::normalizer_criterion(opdoc.op, tangential);
    if (verdict != cert.verdict)
        out.fail("generator_criterion: recorded verdict contradicts the recomputation");
}

inline void check_roundtrip(const io::CertificateDocument& cert, Outcome& out) {
    auto coll = io::induced_collection_from_json(io::field(cert.inputs, "samples"));
    bool twist = cert.inputs.contains("mode") &&
                 cert.inputs["mode"].is_string() && cert.inputs["mode"] == "twist";
    if (!twist) {
        bool verdict = detail::roundtrip_verdict(coll.elements);
        if (verdict != cert.verdict)
            out.fail("kernel_equals_origin_slice: verdict contradicts the recomputation");
        if (cert.trace_summary.contains("kernel_indices")) {
            auto recomputed = detail::kernel_indices(coll.elements);
            std::vector<std::size_t> recorded;
            for (const auto& i : cert.trace_summary["kernel_indices"])
                recorded.push_back(i.get<std::size_t>());
            if (recomputed != recorded) out.fail("kernel_indices: mismatch");
        }
        return;
    }

    // twist mode: rerun the three comparisons from the embedded inputs
    auto unit = io::polynomial_from_json(io::field(cert.inputs, "unit"));
    int tangential = coll.chart.tangential;
    MultiPoly ubar = detail::project_poly(unit.poly, tangential);
    bool normalizer_match = true, restrict_match = true;
    for (const auto& pj : io::field(cert.inputs, "probes")) {
        DiffOp P = io::operator_from_json(pj).op;
        bool plain = detail::normalizer_criterion(P, tangential);
        bool conj = detail::normalizer_criterion(P.conjugate(unit.poly), tangential);
        if (plain != conj) normalizer_match = false;
        if (plain && conj) {
            DiffOp lhs = detail::project_to_subspace(P.conjugate(unit.poly), tangential);
            DiffOp rhs = detail::project_to_subspace(P, tangential).conjugate(ubar);
            if (lhs != rhs) restrict_match = false;
        }
    }
    bool plain_rt = detail::roundtrip_verdict(coll.elements);
    std::vector<InducedElement> twisted;
    for (const auto& x : coll.elements)
        twisted.push_back(detail::conjugate_element(x, ubar));
    bool roundtrip_match = (plain_rt == detail::roundtrip_verdict(twisted));

    auto flag = [&](const char* name, bool value) {
        const io::json& rec = io::field(cert.trace_summary, name);
        if (!rec.is_boolean() || rec.get<bool>() != value)
            out.fail(std::string(name) + ": recorded flag contradicts the recomputation");
        return value;
    };
    bool all = flag("normalizer_match", normalizer_match);
    all = flag("restrict_match", restrict_match) && all;
    all = flag("roundtrip_match", roundtrip_match) && all;
    if (all != cert.verdict)
        out.fail("twist verdict contradicts the recomputation");
}

/// Re-check every claim of a certificate; returns the list of failures.
inline Outcome check_certificate(const io::CertificateDocument& cert) {
    Outcome out;
    try {
        if (cert.kind == "keylemma")
            check_keylemma(cert, out);
        else if (cert.kind == "beta")
            check_beta(cert, out);
        else if (cert.kind == "normalizer")
            check_normalizer(cert, out);
        else if (cert.kind == "roundtrip")
            check_roundtrip(cert, out);
        else
            out.fail("unknown certificate kind '" + cert.kind + "'");
    } catch (const Error& e) {
        out.fail(std::string("verification aborted: ") + e.what());
    }
    return out;
}

} // namespace dk::verify
