// End-to-end checks of the dk command-line tool: fixture files are written
// with the library, the binary is driven through a shell, and exit codes and
// output documents are compared against the library's own results.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "dk/certify.hpp"
#include "dk/io.hpp"
#include "dk/verify.hpp"

namespace fs = std::filesystem;
using dk::io::json;

namespace {

int checks = 0, failures = 0;

void expect(bool ok, const std::string& what) {
    ++checks;
    if (!ok) {
        ++failures;
        std::cerr << "FAIL: " << what << "\n";
    } else {
        std::cout << "ok: " << what << "\n";
    }
}

int run(const std::string& cmd) {
    int status = std::system(cmd.c_str());
    if (status == -1) return -1;
    return WEXITSTATUS(status);
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: cli_tests <path-to-dk-binary>\n";
        return 2;
    }
    std::string bin = argv[1];
    fs::path dir = fs::temp_directory_path() / "dk_cli_tests";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto at = [&](const std::string& name) { return (dir / name).string(); };
    std::string quiet = " > /dev/null 2>&1";

    // --- keylemma solve on the worked fixture ------------------------------
    {
        dk::OpMatrix R = dk::OpMatrix::identity(1, 2, 4, 1);
        dk::io::write_file(at("R.json"),
                           dk::io::to_json(dk::io::MatrixDocument{{"t"}, R}));
        int code = run(bin + " keylemma solve --in " + at("R.json") + " --m 1 --L 2 --out " +
                       at("cert.json") + " --solution " + at("P.json") + quiet);
        expect(code == 0, "keylemma solve exits 0");

        auto Pdoc = dk::io::matrix_from_json(dk::io::read_file(at("P.json")));
        dk::DiffOp expect_op = dk::DiffOp::one(2, 4, 1);
        expect_op.add_term({2}, dk::MultiPoly::constant(2, 4, 1, 2));
        expect(Pdoc.mat.at(0, 0) == expect_op, "solution document equals 1 + 2 D^[2]");

        expect(run(bin + " keylemma verify --in " + at("cert.json") + quiet) == 0,
               "fresh certificate verifies (exit 0)");

        json tampered = dk::io::read_file(at("cert.json"));
        tampered["inputs"]["P"]["entries"][0][0][0]["coeff"][0]["val"] = 2;
        dk::io::write_file(at("tampered.json"), tampered);
        expect(run(bin + " keylemma verify --in " + at("tampered.json") + quiet) == 4,
               "tampered certificate fails (exit 4)");
    }

    // --- zero right-hand side ----------------------------------------------
    {
        dk::OpMatrix Z = dk::OpMatrix::zero(2, 3, 3, 1);
        dk::io::write_file(at("Z.json"),
                           dk::io::to_json(dk::io::MatrixDocument{{"t"}, Z}));
        int code = run(bin + " keylemma solve --in " + at("Z.json") + " --m 1 --L 3 --out " +
                       at("zcert.json") + " --solution " + at("zP.json") + quiet);
        expect(code == 0, "zero input solves");
        auto Pdoc = dk::io::matrix_from_json(dk::io::read_file(at("zP.json")));
        expect(Pdoc.mat == dk::OpMatrix::identity(2, 3, 3, 1), "zero input gives identity");
    }

    // --- error paths --------------------------------------------------------
    {
        std::ofstream bad(at("bad.json"));
        bad << "{ this is not json";
        bad.close();
        expect(run(bin + " keylemma solve --in " + at("bad.json") + " --m 1 --L 2 --out " +
                   at("nope.json") + quiet) == 1,
               "malformed JSON exits 1");
        expect(run(bin + " keylemma solve --in " + at("R.json") + " --m 1 --L 9 --out " +
                   at("nope.json") + quiet) == 3,
               "L beyond the precision exits 3");
        expect(run(bin + " keylemma verify --in " + at("bad.json") + quiet) == 1,
               "verify on malformed JSON exits 1");
    }

    // --- operator arithmetic -------------------------------------------------
    {
        dk::DiffOp d3 = dk::DiffOp::partial(5, 3, 1, 0, 3);
        dk::DiffOp t2 = dk::DiffOp::coordinate(5, 3, 1, 0, 2);
        dk::io::write_file(at("d3.json"),
                           dk::io::to_json(dk::io::OperatorDocument{{"t"}, d3}));
        dk::io::write_file(at("t2.json"),
                           dk::io::to_json(dk::io::OperatorDocument{{"t"}, t2}));
        expect(run(bin + " op mul --in " + at("d3.json") + " --rhs " + at("t2.json") +
                   " --out " + at("prod.json") + quiet) == 0,
               "op mul exits 0");
        auto prod = dk::io::operator_from_json(dk::io::read_file(at("prod.json")));
        expect(prod.op == compose(d3, t2), "op mul composes");

        dk::MultiPoly t3 = dk::MultiPoly::monomial(5, 3, 1, {3}, 1);
        dk::io::write_file(at("t3.json"),
                           dk::io::to_json(dk::io::PolynomialDocument{{"t"}, t3}));
        expect(run(bin + " op apply --in " + at("d3.json") + " --rhs " + at("t3.json") +
                   " --out " + at("val.json") + quiet) == 0,
               "op apply exits 0");
        auto val = dk::io::polynomial_from_json(dk::io::read_file(at("val.json")));
        expect(val.poly == d3.apply(t3), "op apply evaluates");

        expect(run(bin + " op transpose --in " + at("d3.json") + " --out " + at("tp.json") +
                   quiet) == 0,
               "op transpose exits 0");
        auto tp = dk::io::operator_from_json(dk::io::read_file(at("tp.json")));
        expect(tp.op == d3.transpose(), "op transpose agrees");

        expect(run(bin + " op mul --in " + at("d3.json") + " --rhs " + at("t2.json") +
                   " --out " + at("prod2.json") + " --p 3" + quiet) == 1,
               "mismatched --p exits 1");
    }

    // --- growth -------------------------------------------------------------
    {
        dk::DiffOp d3 = dk::DiffOp::partial(2, 3, 1, 0, 3);
        dk::io::write_file(at("g.json"),
                           dk::io::to_json(dk::io::OperatorDocument{{"t"}, d3}));
        expect(run(bin + " growth beta --in " + at("g.json") + " --beta 2 --out " +
                   at("bcert.json") + quiet) == 0,
               "growth beta exits 0");
        auto cert = dk::io::certificate_from_json(dk::io::read_file(at("bcert.json")));
        expect(cert.verdict == false, "beta verdict false for D^[3] at beta 2");
        expect(run(bin + " keylemma verify --in " + at("bcert.json") + quiet) == 0,
               "consistent verdict-false certificate verifies");
        json t = dk::io::read_file(at("bcert.json"));
        t["verdict"] = true;
        dk::io::write_file(at("bcert_bad.json"), t);
        expect(run(bin + " keylemma verify --in " + at("bcert_bad.json") + quiet) == 4,
               "tampered beta verdict exits 4");

        expect(run(bin + " growth convert --p 2 --alpha 1 --beta 0 --out " +
                   at("consts.json") + quiet) == 0,
               "growth convert exits 0");
        expect(run(bin + " growth level --in " + at("consts.json") + " --out " +
                   at("level.json") + quiet) == 0,
               "growth level exits 0");
        json lev = dk::io::read_file(at("level.json"));
        expect(lev["level"] == 1, "estimated level for lambda 1, mu 0, p 2 is 1");
    }

    // --- kashiwara drivers ----------------------------------------------------
    {
        // normalizer: D_M with r = M-1 is not a member
        dk::DiffOp dM = dk::DiffOp::partial(2, 3, 2, 1);
        dk::io::write_file(at("dM.json"),
                           dk::io::to_json(dk::io::OperatorDocument{{"x1", "x2"}, dM}));
        expect(run(bin + " kash normalizer --in " + at("dM.json") + " --r 1 --out " +
                   at("ncert.json") + quiet) == 0,
               "kash normalizer exits 0");
        auto ncert = dk::io::certificate_from_json(dk::io::read_file(at("ncert.json")));
        expect(ncert.verdict == false, "normalizer verdict false for D_M");
        expect(run(bin + " keylemma verify --in " + at("ncert.json") + quiet) == 0,
               "normalizer certificate verifies");

        // restrict t1 d1 + t2 d2 -> t1 d1 over one variable
        dk::DiffOp e1 = compose(dk::DiffOp::coordinate(2, 3, 2, 0), dk::DiffOp::partial(2, 3, 2, 0));
        dk::DiffOp e2 = compose(dk::DiffOp::coordinate(2, 3, 2, 1), dk::DiffOp::partial(2, 3, 2, 1));
        dk::io::write_file(at("euler.json"),
                           dk::io::to_json(dk::io::OperatorDocument{{"x1", "x2"}, e1 + e2}));
        expect(run(bin + " kash restrict --in " + at("euler.json") + " --r 1 --out " +
                   at("restr.json") + quiet) == 0,
               "kash restrict exits 0");
        auto restr = dk::io::operator_from_json(dk::io::read_file(at("restr.json")));
        dk::DiffOp ey = compose(dk::DiffOp::coordinate(2, 3, 1, 0), dk::DiffOp::partial(2, 3, 1, 0));
        expect(restr.op == ey, "restriction drops the transverse Euler term");
        expect(run(bin + " kash restrict --in " + at("dM.json") + " --r 1 --out " +
                   at("nope.json") + quiet) == 1,
               "restrict outside the normalizer exits 1");
        expect(run(bin + " kash restrict --in " + at("euler.json") + " --r 1 --out " +
                   at("restr2.json") + " --cert " + at("rcert.json") + quiet) == 0 &&
                   run(bin + " keylemma verify --in " + at("rcert.json") + quiet) == 0,
               "restrict certificate verifies");

        // dimage of the free rank-one module
        dk::FinPresentation freeN(2, 3, 1, 1);
        dk::io::write_file(at("freeN.json"),
                           dk::io::to_json(dk::io::PresentationDocument{{"x1"}, freeN}));
        expect(run(bin + " kash dimage --in " + at("freeN.json") + " --M 2 --out " +
                   at("delta.json") + quiet) == 0,
               "kash dimage exits 0");
        auto delta = dk::io::presentation_from_json(dk::io::read_file(at("delta.json")));
        expect(delta.pres.relations.size() == 1 &&
                   delta.pres.relations[0][0] == dk::DiffOp::coordinate(2, 3, 2, 1),
               "delta module presentation has the coordinate relation");

        // kernel + roundtrip + twist
        dk::Chart chart(2, 1, 2, 3);
        std::vector<dk::InducedElement> xs{
            dk::InducedElement::term(chart, 1, 0, {0}, dk::DiffOp::one(2, 3, 1)),
            dk::InducedElement::term(chart, 1, 0, {1}, dk::DiffOp::one(2, 3, 1))};
        dk::io::write_file(at("coll.json"),
                           dk::io::to_json(dk::io::InducedCollectionDocument{chart, xs}));
        expect(run(bin + " kash kernel --in " + at("coll.json") + " --out " +
                   at("ker.json") + quiet) == 0,
               "kash kernel exits 0");
        auto ker = dk::io::induced_collection_from_json(dk::io::read_file(at("ker.json")));
        expect(ker.elements.size() == 1 && ker.elements[0] == xs[0],
               "kernel is the origin slice");

        json rt;
        rt["schema_version"] = dk::io::kSchemaVersion;
        rt["kind"] = "roundtrip_input";
        rt["presentation"] = dk::io::to_json(dk::io::PresentationDocument{{"x1"}, freeN});
        rt["samples"] = dk::io::to_json(dk::io::InducedCollectionDocument{chart, xs});
        dk::io::write_file(at("rt.json"), rt);
        expect(run(bin + " kash roundtrip --in " + at("rt.json") + " --out " +
                   at("rtcert.json") + quiet) == 0,
               "kash roundtrip exits 0");
        expect(run(bin + " keylemma verify --in " + at("rtcert.json") + quiet) == 0,
               "roundtrip certificate verifies");

        rt["unit"] = dk::io::to_json(dk::io::PolynomialDocument{
            {"x1", "x2"}, dk::MultiPoly::constant(2, 3, 2, 1)});
        json probes = json::array();
        probes.push_back(dk::io::to_json(dk::io::OperatorDocument{{"x1", "x2"}, dM}));
        rt["probes"] = probes;
        dk::io::write_file(at("twist.json"), rt);
        expect(run(bin + " kash twist --in " + at("twist.json") + " --out " +
                   at("twcert.json") + quiet) == 0,
               "kash twist exits 0 for the trivial unit");
        auto tw = dk::io::certificate_from_json(dk::io::read_file(at("twcert.json")));
        expect(tw.verdict, "trivial twist is identical");
        expect(run(bin + " keylemma verify --in " + at("twcert.json") + quiet) == 0,
               "twist certificate verifies");
    }

    std::cout << (failures == 0 ? "CLI TESTS PASSED" : "CLI TESTS FAILED") << " (" << checks
              << " checks, " << failures << " failures)\n";
    return failures == 0 ? 0 : 1;
}
