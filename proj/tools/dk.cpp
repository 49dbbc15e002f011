// Command-line workbench for exact divided-power differential operator
// arithmetic: operator algebra, congruence solving with certificates,
// growth certification and chart-level module functors. One JSON wire
// format, integers only, canonical output, atomic writes.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dk/certify.hpp"
#include "dk/growth.hpp"
#include "dk/io.hpp"
#include "dk/kashiwara.hpp"
#include "dk/keylemma.hpp"
#include "dk/verify.hpp"

namespace {

using dk::io::json;

int g_exit = 0;

struct CommonFlags {
    std::int64_t p = 0;
    int precision = 0;

    void check(std::int64_t doc_p, int doc_precision) const {
        if (p != 0 && p != doc_p)
            throw dk::ParseError("--p does not match the document");
        if (precision != 0 && precision != doc_precision)
            throw dk::ParseError("--precision does not match the document");
    }
};

dk::Rational parse_rational(const std::string& text) {
    auto slash = text.find('/');
    try {
        if (slash == std::string::npos) return dk::Rational(std::stoll(text));
        return dk::Rational(std::stoll(text.substr(0, slash)),
                            std::stoll(text.substr(slash + 1)));
    } catch (const std::exception&) {
        throw dk::ParseError("cannot parse rational '" + text + "'");
    }
}

/// Accept either a bare operator or an n x n matrix document.
dk::io::MatrixDocument load_matrix_like(const std::string& path) {
    json j = dk::io::read_file(path);
    std::string kind = dk::io::string_field(j, "kind");
    if (kind == "operator_matrix") return dk::io::matrix_from_json(j);
    if (kind == "operator") {
        auto opdoc = dk::io::operator_from_json(j);
        return dk::io::MatrixDocument{opdoc.vars, dk::OpMatrix::scalar(1, opdoc.op)};
    }
    throw dk::ParseError("expected an operator or operator_matrix document");
}

void cmd_op_mul(const CommonFlags& flags, const std::string& in, const std::string& rhs,
                const std::string& out) {
    auto a = dk::io::operator_from_json(dk::io::read_file(in));
    auto b = dk::io::operator_from_json(dk::io::read_file(rhs));
    flags.check(a.op.prime(), a.op.precision());
    dk::io::OperatorDocument result{a.vars, compose(a.op, b.op)};
    dk::io::write_file(out, dk::io::to_json(result));
}

void cmd_op_apply(const CommonFlags& flags, const std::string& in, const std::string& rhs,
                  const std::string& out) {
    auto a = dk::io::operator_from_json(dk::io::read_file(in));
    auto f = dk::io::polynomial_from_json(dk::io::read_file(rhs));
    flags.check(a.op.prime(), a.op.precision());
    dk::io::PolynomialDocument result{a.vars, a.op.apply(f.poly)};
    dk::io::write_file(out, dk::io::to_json(result));
}

void cmd_op_transpose(const CommonFlags& flags, const std::string& in,
                      const std::string& out) {
    auto a = dk::io::operator_from_json(dk::io::read_file(in));
    flags.check(a.op.prime(), a.op.precision());
    dk::io::OperatorDocument result{a.vars, a.op.transpose()};
    dk::io::write_file(out, dk::io::to_json(result));
}

void cmd_keylemma_solve(const CommonFlags& flags, const std::string& in, int m, int L,
                        const std::string& out, const std::string& solution,
                        const std::string& trace) {
    auto Rdoc = load_matrix_like(in);
    flags.check(Rdoc.mat.prime(), Rdoc.mat.precision());
    auto res = dk::key_lemma_solve(Rdoc.mat, m, L);
    auto cert = dk::certify::keylemma_certificate(res, Rdoc.vars);
    dk::io::write_file(out, dk::io::to_json(cert));
    if (!solution.empty())
        dk::io::write_file(solution,
                           dk::io::to_json(dk::io::MatrixDocument{Rdoc.vars, res.P}));
    if (!trace.empty())
        dk::io::write_file(trace, dk::certify::trace_to_json(res.trace, Rdoc.vars));
    std::cout << "solved: P is " << res.P.size() << "x" << res.P.size()
              << ", congruences verified mod p^" << L << "\n";
}

void cmd_verify(const std::string& in) {
    auto cert = dk::io::certificate_from_json(dk::io::read_file(in));
    auto outcome = dk::verify::check_certificate(cert);
    if (outcome.ok) {
        std::cout << "certificate OK (" << cert.kind << ", verdict "
                  << (cert.verdict ? "true" : "false") << ")\n";
        return;
    }
    for (const auto& f : outcome.failures) std::cerr << "FAILED claim: " << f << "\n";
    g_exit = 4;
}

void cmd_growth_beta(const CommonFlags& flags, const std::string& in,
                     const std::string& beta, const std::string& out) {
    json j = dk::io::read_file(in);
    std::string kind = dk::io::string_field(j, "kind");
    dk::Rational b = parse_rational(beta);
    dk::io::CertificateDocument cert;
    if (kind == "operator_matrix") {
        auto doc = dk::io::matrix_from_json(j);
        flags.check(doc.mat.prime(), doc.mat.precision());
        cert = dk::certify::beta_certificate(j, dk::check_beta_bounded(doc.mat, b));
    } else {
        auto doc = dk::io::operator_from_json(j);
        flags.check(doc.op.prime(), doc.op.precision());
        cert = dk::certify::beta_certificate(j, dk::check_beta_bounded(doc.op, b));
    }
    dk::io::write_file(out, dk::io::to_json(cert));
    std::cout << "beta certificate verdict: " << (cert.verdict ? "true" : "false") << "\n";
}

void cmd_growth_convert(std::int64_t p, const std::string& alpha, const std::string& beta,
                        const std::string& out) {
    auto g = dk::convert_growth_constants(parse_rational(alpha), parse_rational(beta), p);
    json j;
    j["schema_version"] = dk::io::kSchemaVersion;
    j["kind"] = "growth_constants";
    j["p"] = p;
    j["alpha"] = dk::io::rational_to_json(g.alpha);
    j["beta"] = dk::io::rational_to_json(g.beta);
    j["eta_exp"] = dk::io::rational_to_json(g.eta_exp);
    j["c_exp"] = dk::io::rational_to_json(g.c_exp);
    j["lambda"] = dk::io::rational_to_json(g.lambda);
    j["mu"] = dk::io::rational_to_json(g.mu);
    dk::io::write_file(out, j);
    std::cout << "eta = p^(" << g.eta_exp.str() << "), c = p^(" << g.c_exp.str()
              << "), lambda = " << g.lambda.str() << ", mu = " << g.mu.str() << "\n";
}

void cmd_growth_level(const std::string& in, const std::string& out) {
    json j = dk::io::read_file(in);
    dk::io::check_schema(j);
    if (dk::io::string_field(j, "kind") != "growth_constants")
        throw dk::ParseError("expected kind 'growth_constants'");
    dk::GrowthConstants g;
    g.prime = dk::io::int_field(j, "p");
    g.lambda = dk::io::rational_from_json(dk::io::field(j, "lambda"));
    g.mu = dk::io::rational_from_json(dk::io::field(j, "mu"));
    int level = dk::estimate_level(g, g.prime);
    std::cout << "level: " << level << "\n";
    if (!out.empty()) {
        json o;
        o["schema_version"] = dk::io::kSchemaVersion;
        o["kind"] = "level";
        o["level"] = level;
        dk::io::write_file(out, o);
    }
}

dk::Chart chart_for(const dk::io::OperatorDocument& doc, int tangential) {
    return dk::Chart(doc.op.var_count(), tangential, doc.op.prime(), doc.op.precision());
}

void cmd_kash_normalizer(const CommonFlags& flags, const std::string& in, int tangential,
                         const std::string& out) {
    auto doc = dk::io::operator_from_json(dk::io::read_file(in));
    flags.check(doc.op.prime(), doc.op.precision());
    dk::Chart chart = chart_for(doc, tangential);
    bool verdict = dk::normalizer_member(doc.op, chart);
    auto cert = dk::certify::normalizer_certificate(doc, tangential, verdict);
    dk::io::write_file(out, dk::io::to_json(cert));
    std::cout << "normalizer verdict: " << (verdict ? "true" : "false") << "\n";
}

void cmd_kash_restrict(const CommonFlags& flags, const std::string& in, int tangential,
                       const std::string& out, const std::string& cert_path) {
    auto doc = dk::io::operator_from_json(dk::io::read_file(in));
    flags.check(doc.op.prime(), doc.op.precision());
    dk::Chart chart = chart_for(doc, tangential);
    dk::DiffOp res = dk::restrict_op(doc.op, chart); // NotInNormalizer on failure
    std::vector<std::string> yvars(doc.vars.begin(), doc.vars.begin() + tangential);
    dk::io::write_file(out, dk::io::to_json(dk::io::OperatorDocument{yvars, res}));
    if (!cert_path.empty()) {
        auto cert = dk::certify::normalizer_certificate(doc, tangential, true);
        dk::io::write_file(cert_path, dk::io::to_json(cert));
    }
}

void cmd_kash_dimage(const CommonFlags& flags, const std::string& in, int total_vars,
                     const std::string& out) {
    auto doc = dk::io::presentation_from_json(dk::io::read_file(in));
    flags.check(doc.pres.prime, doc.pres.precision);
    dk::Chart chart(total_vars, doc.pres.var_count, doc.pres.prime, doc.pres.precision);
    dk::FinPresentation image = dk::direct_image(doc.pres, chart);
    std::vector<std::string> vars = doc.vars;
    for (int j = doc.pres.var_count; j < total_vars; ++j)
        vars.push_back("x" + std::to_string(j + 1));
    dk::io::write_file(out, dk::io::to_json(dk::io::PresentationDocument{vars, image}));
}

void cmd_kash_kernel(const CommonFlags& flags, const std::string& in,
                     const std::string& out) {
    auto coll = dk::io::induced_collection_from_json(dk::io::read_file(in));
    flags.check(coll.chart.prime, coll.chart.precision);
    auto kernel = dk::kernel_functor(coll.elements, coll.chart);
    dk::io::write_file(
        out, dk::io::to_json(dk::io::InducedCollectionDocument{coll.chart, kernel}));
    std::cout << "kernel size: " << kernel.size() << "\n";
}

struct RoundtripInput {
    dk::io::PresentationDocument pres;
    dk::io::InducedCollectionDocument samples;
};

RoundtripInput load_roundtrip_input(const json& j) {
    dk::io::check_schema(j);
    if (dk::io::string_field(j, "kind") != "roundtrip_input")
        throw dk::ParseError("expected kind 'roundtrip_input'");
    return RoundtripInput{
        dk::io::presentation_from_json(dk::io::field(j, "presentation")),
        dk::io::induced_collection_from_json(dk::io::field(j, "samples"))};
}

void cmd_kash_roundtrip(const CommonFlags& flags, const std::string& in,
                        const std::string& out) {
    json j = dk::io::read_file(in);
    auto input = load_roundtrip_input(j);
    flags.check(input.samples.chart.prime, input.samples.chart.precision);
    bool verdict =
        dk::roundtrip_unit_check(input.pres.pres, input.samples.elements, input.samples.chart);
    auto cert = dk::certify::roundtrip_certificate(input.pres, input.samples, verdict);
    dk::io::write_file(out, dk::io::to_json(cert));
    std::cout << "roundtrip verdict: " << (verdict ? "true" : "false") << "\n";
}

void cmd_kash_twist(const CommonFlags& flags, const std::string& in,
                    const std::string& out) {
    json j = dk::io::read_file(in);
    auto input = load_roundtrip_input(j);
    flags.check(input.samples.chart.prime, input.samples.chart.precision);
    auto unit = dk::io::polynomial_from_json(dk::io::field(j, "unit"));
    std::vector<dk::io::OperatorDocument> probe_docs;
    std::vector<dk::DiffOp> probes;
    if (j.contains("probes")) {
        for (const auto& pj : j["probes"]) {
            probe_docs.push_back(dk::io::operator_from_json(pj));
            probes.push_back(probe_docs.back().op);
        }
    }
    auto rep = dk::twisted_roundtrip(input.pres.pres, input.samples.chart, unit.poly,
                                     input.samples.elements, probes);
    auto cert = dk::certify::twist_certificate(input.pres, input.samples, unit, probe_docs, rep);
    dk::io::write_file(out, dk::io::to_json(cert));
    std::cout << "twist verdict: " << (rep.all() ? "identical" : "diverged") << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dk: exact workbench for divided-power differential operators"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string in, rhs, out, cert, solution, trace, alpha, beta;
    int m = 1, L = 1, tangential = 0, total_vars = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--p", flags.p, "expected prime (validated against documents)");
        sub->add_option("--precision", flags.precision, "expected precision N (validated)");
    };

    auto* op = app.add_subcommand("op", "operator arithmetic");
    op->require_subcommand(1);
    auto* mul = op->add_subcommand("mul", "compose two operators");
    mul->add_option("--in", in, "left operand document")->required();
    mul->add_option("--rhs", rhs, "right operand document")->required();
    mul->add_option("--out", out, "output operator document")->required();
    add_common(mul);
    mul->callback([&] { cmd_op_mul(flags, in, rhs, out); });

    auto* apply = op->add_subcommand("apply", "apply an operator to a polynomial");
    apply->add_option("--in", in, "operator document")->required();
    apply->add_option("--rhs", rhs, "polynomial document")->required();
    apply->add_option("--out", out, "output polynomial document")->required();
    add_common(apply);
    apply->callback([&] { cmd_op_apply(flags, in, rhs, out); });

    auto* tr = op->add_subcommand("transpose", "formal adjoint of an operator");
    tr->add_option("--in", in, "operator document")->required();
    tr->add_option("--out", out, "output operator document")->required();
    add_common(tr);
    tr->callback([&] { cmd_op_transpose(flags, in, out); });

    auto* kl = app.add_subcommand("keylemma", "congruence solver and verifier");
    kl->require_subcommand(1);
    auto* solve = kl->add_subcommand("solve", "build the unipotent intertwiner for R");
    solve->add_option("--in", in, "matrix (or operator) document for R")->required();
    solve->add_option("--m", m, "level m >= 1")->required();
    solve->add_option("--L", L, "target congruence exponent")->required();
    solve->add_option("--out", out, "certificate output (embeds P)")->required();
    solve->add_option("--solution", solution, "also write the bare solution matrix");
    solve->add_option("--trace", trace, "also write the full solver trace");
    add_common(solve);
    solve->callback([&] { cmd_keylemma_solve(flags, in, m, L, out, solution, trace); });

    auto* ver = kl->add_subcommand("verify", "re-check a certificate independently");
    ver->add_option("--in", in, "certificate document")->required();
    ver->callback([&] { cmd_verify(in); });

    auto* growth = app.add_subcommand("growth", "growth conditions and certificates");
    growth->require_subcommand(1);
    auto* gb = growth->add_subcommand("beta", "per-level order certificate");
    gb->add_option("--in", in, "operator or matrix document")->required();
    gb->add_option("--beta", beta, "bound (integer or a/b)")->required();
    gb->add_option("--out", out, "certificate output")->required();
    add_common(gb);
    gb->callback([&] { cmd_growth_beta(flags, in, beta, out); });

    auto* gc = growth->add_subcommand("convert", "growth constants from (alpha, beta)");
    gc->add_option("--p", flags.p, "prime")->required();
    gc->add_option("--alpha", alpha, "slope (integer or a/b)")->required();
    gc->add_option("--beta", beta, "offset (integer or a/b)")->required();
    gc->add_option("--out", out, "constants output")->required();
    gc->callback([&] { cmd_growth_convert(flags.p, alpha, beta, out); });

    auto* gl = growth->add_subcommand("level", "smallest admissible level");
    gl->add_option("--in", in, "growth constants document")->required();
    gl->add_option("--out", out, "optional level output document");
    gl->callback([&] { cmd_growth_level(in, out); });

    auto* kash = app.add_subcommand("kash", "chart-level module functors");
    kash->require_subcommand(1);
    auto* norm = kash->add_subcommand("normalizer", "normalizer membership verdict");
    norm->add_option("--in", in, "operator document")->required();
    norm->add_option("--r", tangential, "tangential variable count")->required();
    norm->add_option("--out", out, "certificate output")->required();
    add_common(norm);
    norm->callback([&] { cmd_kash_normalizer(flags, in, tangential, out); });

    auto* restr = kash->add_subcommand("restrict", "restrict a normalizer member");
    restr->add_option("--in", in, "operator document")->required();
    restr->add_option("--r", tangential, "tangential variable count")->required();
    restr->add_option("--out", out, "restricted operator output")->required();
    restr->add_option("--cert", cert, "optional certificate output");
    add_common(restr);
    restr->callback([&] { cmd_kash_restrict(flags, in, tangential, out, cert); });

    auto* dim = kash->add_subcommand("dimage", "direct image of a presentation");
    dim->add_option("--in", in, "presentation document over the subspace")->required();
    dim->add_option("--M", total_vars, "ambient variable count")->required();
    dim->add_option("--out", out, "presentation output")->required();
    add_common(dim);
    dim->callback([&] { cmd_kash_dimage(flags, in, total_vars, out); });

    auto* kern = kash->add_subcommand("kernel", "transverse kernel of a collection");
    kern->add_option("--in", in, "induced collection document")->required();
    kern->add_option("--out", out, "kernel collection output")->required();
    add_common(kern);
    kern->callback([&] { cmd_kash_kernel(flags, in, out); });

    auto* rt = kash->add_subcommand("roundtrip", "kernel-of-direct-image check");
    rt->add_option("--in", in, "roundtrip input document")->required();
    rt->add_option("--out", out, "certificate output")->required();
    add_common(rt);
    rt->callback([&] { cmd_kash_roundtrip(flags, in, out); });

    auto* tw = kash->add_subcommand("twist", "conjugated re-run comparison");
    tw->add_option("--in", in, "roundtrip input document with a unit")->required();
    tw->add_option("--out", out, "certificate output")->required();
    add_common(tw);
    tw->callback([&] { cmd_kash_twist(flags, in, out); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const dk::NotDivisible& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const dk::InsufficientPrecision& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const dk::PrecisionExceeded& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const dk::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return g_exit;
}
