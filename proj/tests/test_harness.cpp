#include "doctest.h"
#include "qvar/harness.hpp"
#include "qvar/local_factors.hpp"

#include <boost/math/special_functions/factorials.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

using namespace qvar;
using std::string;

namespace {

string one_record_jsonl(const string& extra = "", const string& hecke = R"("2":-0.5,"3":0.25,"5":1.0)") {
    return R"({"kind":"maass","t":9.5337,"parity":1,"hecke":{)" + hecke + R"(},"l_sym2":1.1)" + extra + "}\n";
}

bool all_equal(const Dataset& a, const Dataset& b) {
    if (a.records.size() != b.records.size()) return false;
    for (size_t i = 0; i < a.records.size(); ++i) {
        const auto &x = a.records[i], &y = b.records[i];
        if (x.t != y.t || x.k != y.k || x.parity != y.parity || x.l_sym2 != y.l_sym2 || x.l_half != y.l_half ||
            x.hecke.values() != y.hecke.values())
            return false;
    }
    return true;
}

} // namespace

TEST_CASE("loading: empty input, round trips and composite fill-in") {
    CHECK(parse_dataset("", DatasetFormat::Jsonl).records.empty());
    CHECK(parse_dataset("\n\n", DatasetFormat::Csv).records.empty());

    const Dataset syn = synth_dataset(7, 5, 60);
    const Dataset a = parse_dataset(dataset_to_jsonl(syn), DatasetFormat::Jsonl);
    CHECK(all_equal(a, syn));
    CHECK(a.warnings.empty());
    const Dataset b = parse_dataset(dataset_to_csv(syn), DatasetFormat::Csv);
    CHECK(all_equal(b, syn));
    CHECK(a.n_max == 60);

    // only primes given: composites follow from multiplicativity and the Hecke recursion
    const Dataset p = parse_dataset(one_record_jsonl(), DatasetFormat::Jsonl);
    REQUIRE(p.records.size() == 1);
    const auto& lam = p.records[0].hecke;
    CHECK(lam.n_max() == 5);
    CHECK(lam(4) == doctest::Approx(0.25 - 1.0).epsilon(1e-15));
    CHECK(p.records[0].parity == 1);

    // records come back sorted by t, holomorphic after Maass
    const string mixed = R"({"kind":"hol","k":12,"hecke":{"2":-0.1,"3":0.2},"l_sym2":1,"l_half":0.8})"
                         "\n" +
                         one_record_jsonl() +
                         R"({"kind":"maass","t":4.0,"hecke":{"2":0.3},"l_sym2":1})"
                         "\n";
    const Dataset m = parse_dataset(mixed, DatasetFormat::Jsonl);
    REQUIRE(m.records.size() == 3);
    CHECK(m.records[0].t == 4.0);
    CHECK(m.records[1].t == 9.5337);
    CHECK(m.records[2].kind == EigenformRecord::Kind::Holomorphic);
    CHECK(*m.records[2].l_half == 0.8);

    const string path = "qvar_test_dataset.jsonl";
    {
        std::ofstream(path) << dataset_to_jsonl(syn);
    }
    CHECK(all_equal(load_dataset(path, DatasetFormat::Jsonl), syn));
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_dataset("/nonexistent/qvar.jsonl", DatasetFormat::Jsonl), ConfigError);
    CHECK_THROWS_AS(dataset_format_from_string("xml"), ConfigError);
}

TEST_CASE("loading: parse, schema and validation errors are distinct") {
    CHECK_THROWS_AS(parse_dataset("{\"kind\":\"maass\",", DatasetFormat::Jsonl), ParseError);
    CHECK_THROWS_AS(parse_dataset(R"({"kind":"maass","hecke":{"2":0},"l_sym2":1})", DatasetFormat::Jsonl), SchemaError);
    CHECK_THROWS_AS(parse_dataset(R"({"kind":"eisenstein","t":1,"hecke":{"2":0},"l_sym2":1})", DatasetFormat::Jsonl),
                    SchemaError);
    CHECK_THROWS_AS(parse_dataset(R"({"kind":"maass","t":"9","hecke":{"2":0},"l_sym2":1})", DatasetFormat::Jsonl),
                    SchemaError);
    // 3 is missing and cannot be filled in
    CHECK_THROWS_AS(parse_dataset(one_record_jsonl("", R"("2":0.1,"4":-0.99)"), DatasetFormat::Jsonl), SchemaError);
    CHECK_THROWS_AS(parse_dataset("kind,t\nmaass,1\n", DatasetFormat::Csv), SchemaError);
    CHECK_THROWS_AS(parse_dataset("kind,t,hecke,l_sym2\nmaass,abc,2:0.1,1\n", DatasetFormat::Csv), ParseError);
    CHECK_THROWS_AS(parse_dataset("kind,t,hecke,l_sym2\nmaass,1,2:0.1\n", DatasetFormat::Csv), ParseError);

    // an unknown field is a warning only
    const Dataset w = parse_dataset(one_record_jsonl(R"(,"source":"x")"), DatasetFormat::Jsonl);
    REQUIRE(w.warnings.size() == 1);
    CHECK(w.warnings[0].find("source") != string::npos);

    // lambda(2) lambda(3) != lambda(6) beyond 1e-6: the message names the record
    const string bad6 = one_record_jsonl("", R"("2":-0.5,"3":0.25,"5":1.0,"6":0.1)");
    try {
        parse_dataset(one_record_jsonl() + bad6, DatasetFormat::Jsonl);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        const string msg = e.what();
        CHECK(msg.find("record 1") != string::npos);
        CHECK(msg.find("(2, 3)") != string::npos);
        CHECK(msg.find("duplicate") != string::npos); // both records share t
        CHECK(msg.find("record 0: Hecke") == string::npos);
    }
    CHECK_THROWS_AS(parse_dataset(one_record_jsonl("", R"("1":2,"2":0.1)"), DatasetFormat::Jsonl), ValidationError);
    CHECK_THROWS_AS(parse_dataset(R"({"kind":"hol","k":14,"hecke":{"2":0},"l_sym2":1})", DatasetFormat::Jsonl),
                    ValidationError);
    CHECK_THROWS_AS(parse_dataset(R"({"kind":"maass","t":3,"hecke":{"2":0},"l_sym2":-1})", DatasetFormat::Jsonl),
                    ValidationError);
}

TEST_CASE("validation detects every single-entry corruption that a covered pair can see") {
    const Dataset ds = synth_dataset(11, 1, 60);
    REQUIRE(validate_records(ds.records).empty());
    // lambda(n) for n <= 30 enters lambda(n) lambda(2) = ... with 2n <= 60; larger primes are not covered
    for (long long n = 2; n <= 30; ++n) {
        auto v = ds.records[0].hecke.values();
        v[n - 1] += 1e-3;
        EigenformRecord r = ds.records[0];
        r.hecke = HeckeEigenvalueMap(v);
        const auto issues = validate_records({r});
        REQUIRE(issues.size() == 1);
        CHECK(issues[0].index == 0);
    }
    auto v = ds.records[0].hecke.values();
    v[58] += 1e-3; // lambda(59): no covered pair involves it
    EigenformRecord r = ds.records[0];
    r.hecke = HeckeEigenvalueMap(v);
    CHECK(validate_records({r}).empty());
    v = ds.records[0].hecke.values();
    v[5] += 1e-7; // below the 1e-6 tolerance
    r.hecke = HeckeEigenvalueMap(v);
    CHECK(validate_records({r}).empty());
}

TEST_CASE("synthetic datasets: determinism and the Weyl-law density") {
    const Dataset one = synth_dataset(3, 1, 30);
    REQUIRE(one.records.size() == 1);
    CHECK(validate_records(one.records).empty());
    CHECK(dataset_to_jsonl(synth_dataset(5, 40, 100)) == dataset_to_jsonl(synth_dataset(5, 40, 100)));
    CHECK(dataset_hash(synth_dataset(5, 40, 100)) == dataset_hash(synth_dataset(5, 40, 100)));
    CHECK(dataset_hash(synth_dataset(5, 40, 100)) != dataset_hash(synth_dataset(6, 40, 100)));
    CHECK(dataset_hash(synth_dataset(5, 40, 100)).size() == 16);

    const Dataset ds = synth_dataset(1, 500, 50);
    CHECK(validate_records(ds.records).empty());
    for (const auto& r : ds.records) {
        CHECK(r.l_sym2 >= 0.5);
        CHECK(r.l_sym2 <= 2.0);
        CHECK(std::abs(r.hecke(2)) <= 2.0);
    }
    const WeylCheck w = weyl_law_check(ds);
    CHECK(w.pass);
    CHECK(w.max_rel_dev < 0.05);
    CHECK(w.T.size() == 6);
    // N(T) counted directly at the last checkpoint
    long long direct = 0;
    for (const auto& r : ds.records) direct += r.t <= w.T.back();
    CHECK(direct == w.count.back());

    // a dataset spaced linearly in t has the wrong density
    Dataset lin = ds;
    for (size_t j = 0; j < lin.records.size(); ++j) lin.records[j].t = 0.5 * double(j + 1);
    CHECK_FALSE(weyl_law_check(lin).pass);
    CHECK_FALSE(weyl_law_check(synth_dataset(1, 5, 10)).pass); // too few forms
    CHECK_THROWS_AS(synth_dataset(1, 0, 10), ConfigError);
}

TEST_CASE("weighted variance sum: single term, linear structure, symmetry, threads") {
    const auto h1 = KernelFn::bump(1, 2), h2 = KernelFn::bump(1.2, 1.8);
    const WeightFn u;
    HarnessConfig cfg;
    cfg.compute_prediction = false;

    const auto empty = weighted_variance_sum(Dataset{}, 1, h1, 1, h1, 3.0, u, cfg);
    CHECK(empty.weighted_sum == 0.0);
    CHECK(empty.per_form.empty());

    // one form; kernel supports near 1.5 leave a single q term in each omega
    const auto thin1 = KernelFn::bump(1.5, 1.6), thin2 = KernelFn::bump(1.55, 1.65);
    Dataset one = synth_dataset(9, 1, 200);
    one.records[0].t = 2 * kPi * 2.5;
    const double T = one.records[0].t / weight_horizon(u);
    const auto r1 = weighted_variance_sum(one, 1, thin1, 1, thin2, T, u, cfg);
    REQUIRE(r1.per_form.size() == 1);
    const auto& f = one.records[0];
    const auto w1 = omega_poincare(f, 1, thin1, cfg.quad), w2 = omega_poincare(f, 1, thin2, cfg.quad);
    CHECK(w1.q_terms == 1);
    CHECK(w2.q_terms == 1);
    const double hand = u(f.t / T) * f.l_sym2 * (w1.value * w2.value) / T;
    CHECK(r1.weighted_sum == hand);
    CHECK(hand != 0.0);

    Dataset ds = synth_dataset(2, 40, 200);
    const double T2 = ds.records.back().t / weight_horizon(u);
    const auto base = weighted_variance_sum(ds, 1, h1, 2, h2, T2, u, cfg);
    CHECK(std::isfinite(base.weighted_sum));
    CHECK(base.weighted_sum != 0.0);
    // omega carries 1/L(1, sym^2) inside, the external weight carries L once: doubling L halves the sum
    Dataset dbl = ds;
    for (auto& r : dbl.records) r.l_sym2 *= 2;
    CHECK(weighted_variance_sum(dbl, 1, h1, 2, h2, T2, u, cfg).weighted_sum == 0.5 * base.weighted_sum);
    // swapping the two observables is exact
    CHECK(weighted_variance_sum(ds, 2, h2, 1, h1, T2, u, cfg).weighted_sum == base.weighted_sum);
    // thread count does not change a byte of the report
    HarnessConfig par = cfg;
    par.threads = 3;
    CHECK(render_report(weighted_variance_sum(ds, 1, h1, 2, h2, T2, u, par), ReportFormat::Json) ==
          render_report(base, ReportFormat::Json));
    CHECK(render_report(weighted_variance_sum(ds, 1, h1, 2, h2, T2, u, cfg), ReportFormat::Json) ==
          render_report(base, ReportFormat::Json));

    // records stopping short of the weight's horizon
    try {
        weighted_variance_sum(ds, 1, h1, 1, h1, 2 * T2, u, cfg);
        FAIL("expected insufficient range");
    } catch (const InsufficientRange& e) {
        const double need = 2 * T2 * weight_horizon(u), have = ds.records.back().t;
        CHECK(e.shortfall() == static_cast<long long>(std::ceil((need * need - have * have) / 12.0)));
    }
}

TEST_CASE("weighted variance sum: prediction side and reports") {
    const auto h = KernelFn::bump(1, 2);
    const WeightFn u;
    HarnessConfig cfg;
    cfg.quad.c_max = 4;
    const Dataset ds = synth_dataset(4, 30, 200);
    const double T = ds.records.back().t / weight_horizon(u);
    const auto r = weighted_variance_sum(ds, 1, h, 1, h, T, u, cfg);
    const auto s1 = as_combo(PoincareAtom{AtomKind::IncompleteWeight2k, 2, 1});
    const double qd = q_diag(s1, s1, h, h, cfg.quad).value, qn = q_nondiag(s1, s1, h, h, cfg.quad).value;
    CHECK(r.predicted_diag == qd);
    CHECK(r.predicted_nondiag == qn);
    CHECK(r.predicted == u.integral() * (qd + qn));
    CHECK(r.residual == r.weighted_sum - r.predicted);
    CHECK(r.bound_ratio > 0);
    CHECK(r.limit_status == "prediction-only");

    const string js = render_report(r, ReportFormat::Json);
    CHECK(js.find("\"limit_status\": \"prediction-only\"") != string::npos);
    // canonical key order: sorted
    CHECK(js.find("\"T\"") < js.find("\"bound_ratio\""));
    CHECK(js.find("\"bound_ratio\"") < js.find("\"config\""));
    CHECK(js.find("\"threads\"") == string::npos);
    const string csv = render_report(r, ReportFormat::Csv);
    CHECK(csv.find("index,t,l_sym2,weight,omega1,omega2,q_terms\n") != string::npos);
    CHECK(csv.find("# limit_status=prediction-only") != string::npos);
    CHECK(render_report(r, ReportFormat::Table).find("prediction-only") != string::npos);
    CHECK_THROWS_AS(report_format_from_string("yaml"), ConfigError);

    // m = 0 needs a mean-zero kernel; a plain bump leaves the prediction unavailable, the sum is still computed
    const auto z = weighted_variance_sum(ds, 0, KernelFn::mean_zero_bump(1, 2), 0, KernelFn::mean_zero_bump(1, 2), T, u, cfg);
    CHECK(z.predicted_nondiag == 0.0);
    CHECK(z.note.find("m = 0") != string::npos);
}

TEST_CASE("eigenvalue experiment") {
    const Dataset ds = synth_dataset(1, 20, 20);
    EigenformRecord f;
    f.kind = EigenformRecord::Kind::Holomorphic;
    f.k = 12;
    f.l_half = 1.0;
    const auto r = eigenvalue_experiment(ds, f, 1.0, WeightFn{});
    const double expect = std::pow(2.0, 11) * 120.0 * 120.0 / boost::math::factorial<double>(11);
    CHECK(r.predicted == doctest::Approx(expect).epsilon(1e-14));
    CHECK(r.limit_status == "prediction-only");
    f.l_half = 2.5;
    CHECK(eigenvalue_experiment(ds, f, 1.0, WeightFn{}).predicted == doctest::Approx(2.5 * expect).epsilon(1e-14));

    EigenformRecord g;
    g.t = 0;
    g.l_half = 1.0;
    const double g4 = std::pow(boost::math::tgamma(0.25), 4);
    CHECK(eigenvalue_experiment(ds, g, 1.0, WeightFn{}).predicted == doctest::Approx(g4 / (2 * kPi * kPi)).epsilon(1e-13));
    g.parity = -1;
    CHECK_THROWS_AS(eigenvalue_experiment(ds, g, 1.0, WeightFn{}), DomainError);
    f.l_half.reset();
    CHECK_THROWS_AS(eigenvalue_experiment(ds, f, 1.0, WeightFn{}), DomainError);
}

TEST_CASE("suites") {
    CHECK_THROWS_AS(run_suite("everything"), ConfigError);
    CHECK(suite_names().size() == 5);
    const auto lf = run_suite("localfactor-routes");
    CHECK(lf.pass());
    CHECK(lf.cases.size() > 300);
    CHECK(run_suite("recurrence").pass());
    // the literal scale identity is false off its corrected (twisted) form; every other identity holds
    const auto es = run_suite("expsum-identities");
    CHECK(es.failures() > 0);
    long long twisted = 0;
    for (const auto& c : es.cases) {
        if (!c.pass) CHECK(c.id.rfind("scale p=", 0) == 0);
        twisted += c.id.rfind("scale-twisted", 0) == 0;
    }
    CHECK(twisted > 0);
    const string csv = render_suite(lf, ReportFormat::Csv);
    CHECK(csv.rfind("suite,id,error,tol,pass,note\n", 0) == 0);
    CHECK(render_suite(lf, ReportFormat::Json).find("\"failures\": 0") != string::npos);
}
