// qvar: command-line front end.  Exit codes: 0 all checks pass, 1 numerical
// failure, 2 configuration / IO error.
#include "qvar/exp_sums.hpp"
#include "qvar/harness.hpp"
#include "qvar/hecke_alg.hpp"
#include "qvar/local_factors.hpp"
#include "qvar/variance_kernels.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

using std::string;
using std::vector;
using json = nlohmann::json;
using namespace qvar;

namespace {

struct Globals {
    double tol = 1e-6;
    int threads = 1;
    string report = "table";
    std::uint64_t seed = 1;
    string out;
};

string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// "bump:a:b", "gauss:mu:sigma", "power:n:N", "meanzero:a:b"
KernelFn parse_kernel(const string& spec) {
    vector<string> parts;
    std::stringstream ss(spec);
    for (string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw ConfigError("kernel '" + spec + "' must look like family:p1:p2");
    double a = 0, b = 0;
    try {
        a = std::stod(parts[1]);
        b = std::stod(parts[2]);
    } catch (const std::exception&) {
        throw ConfigError("kernel '" + spec + "': parameters must be numbers");
    }
    try {
        if (parts[0] == "bump") return KernelFn::bump(a, b);
        if (parts[0] == "gauss") return KernelFn::gaussian_window(a, b);
        if (parts[0] == "power") return KernelFn::power_decay(int(a), int(b));
        if (parts[0] == "meanzero") return KernelFn::mean_zero_bump(a, b);
    } catch (const DomainError& e) {
        throw ConfigError(string("kernel '") + spec + "': " + e.what());
    }
    throw ConfigError("unknown kernel family '" + parts[0] + "' (bump, gauss, power, meanzero)");
}

void emit(const Globals& g, const string& text) {
    if (g.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(g.out, std::ios::binary);
    if (!f) throw ConfigError("cannot write '" + g.out + "'");
    f << text;
}

// Flat rows -> json array / csv / aligned table.
string render_rows(const vector<string>& cols, const vector<vector<string>>& rows, ReportFormat f) {
    std::ostringstream os;
    if (f == ReportFormat::Json) {
        json arr = json::array();
        for (const auto& r : rows) {
            json o;
            for (size_t i = 0; i < cols.size(); ++i) o[cols[i]] = r[i];
            arr.push_back(o);
        }
        return arr.dump(2) + "\n";
    }
    if (f == ReportFormat::Csv) {
        for (size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
        os << "\n";
        for (const auto& r : rows) {
            for (size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
            os << "\n";
        }
        return os.str();
    }
    vector<size_t> w(cols.size());
    for (size_t i = 0; i < cols.size(); ++i) w[i] = cols[i].size();
    for (const auto& r : rows)
        for (size_t i = 0; i < r.size(); ++i) w[i] = std::max(w[i], r[i].size());
    auto line = [&](const vector<string>& r) {
        for (size_t i = 0; i < r.size(); ++i) os << (i ? "  " : "") << r[i] << string(w[i] - r[i].size(), ' ');
        os << "\n";
    };
    line(cols);
    for (const auto& r : rows) line(r);
    return os.str();
}

string join(const vector<long long>& v, const char* sep) {
    string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + std::to_string(v[i]);
    return s;
}

int cmd_expsum(const Globals& g, const string& identity, const vector<long long>& primes, long long c_max,
               long long param_max) {
    const vector<string> cols{"identity", "p", "c", "params", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "pass"};
    vector<vector<string>> rows;
    long long failures = 0;
    auto add = [&](const IdentityCheck& c) {
        rows.push_back({c.identity, std::to_string(c.p), std::to_string(c.modulus), join(c.params, " "), fmt(c.lhs.real()),
                        fmt(c.lhs.imag()), fmt(c.rhs.real()), fmt(c.rhs.imag()), c.pass ? "true" : "false"});
        failures += !c.pass;
    };
    const bool all = identity == "all";
    bool known = all;
    for (long long p : primes)
        for (long long c = 1; c <= c_max; ++c)
            for (long long a = 0; a <= param_max; ++a)
                for (long long b = 0; b <= param_max; ++b) {
                    auto run = [&](const char* name, auto fn) {
                        if (!all && identity != name) return;
                        known = true;
                        try {
                            add(fn());
                        } catch (const ConditionViolated&) {
                        }
                    };
                    run("scale", [&] { return identity_scale(p, c, a, b); });
                    run("scale-twisted", [&] { return identity_scale_twisted(p, c, a, b); });
                    run("vanish", [&] { return identity_vanish(p, c, a, b); });
                    run("swap", [&] { return identity_swap(p, c, a, b); });
                    run("descent", [&] { return identity_descent(p, c, a, b); });
                }
    if (!known) throw ConfigError("unknown identity '" + identity + "' (scale, scale-twisted, vanish, swap, descent, all)");
    emit(g, render_rows(cols, rows, report_format_from_string(g.report)));
    std::cerr << rows.size() - failures << "/" << rows.size() << " identity checks pass\n";
    return failures ? 1 : 0;
}

int cmd_kloosterman(const Globals& g, long long m, long long n, long long c) {
    const Cplx k = kloosterman(m, n, c);
    const vector<string> cols{"m", "n", "c", "re", "im"};
    emit(g, render_rows(cols, {{std::to_string(m), std::to_string(n), std::to_string(c), fmt(k.real()), fmt(k.imag())}},
                        report_format_from_string(g.report)));
    return 0;
}

int cmd_hecke(const Globals& g, long long n, long long m, const string& atom_kind, int weight) {
    vector<vector<string>> rows;
    if (atom_kind.empty()) {
        for (auto [d, v] : hecke_product_expand(n, m)) rows.push_back({std::to_string(d), std::to_string(v)});
        emit(g, render_rows({"d", "index"}, rows, report_format_from_string(g.report)));
        return 0;
    }
    PoincareAtom atom;
    if (atom_kind == "hol") atom.kind = AtomKind::Holomorphic;
    else if (atom_kind == "inc") atom.kind = m == 0 ? AtomKind::IncompleteEisenstein : AtomKind::IncompleteWeight2k;
    else throw ConfigError("atom kind must be hol or inc");
    atom.m = m;
    atom.weight = weight > 0 ? weight : (atom.kind == AtomKind::Holomorphic ? 12 : 2);
    try {
        atom.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    for (const auto& a : hecke_on_atom(atom, n).atoms)
        rows.push_back({to_string(a.kind), std::to_string(a.weight), std::to_string(a.m), a.kernel_dilation.str(),
                        fmt(a.coefficient)});
    emit(g, render_rows({"kind", "weight", "m", "dilation", "coefficient"}, rows, report_format_from_string(g.report)));
    return 0;
}

int cmd_localfactor(const Globals& g, int k, double t2, double t3) {
    const TripleParams p{k, t2, t3};
    try {
        p.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    const double iv = i_v(p), ivp = i_v_product(p);
    const double rel = std::abs(iv - ivp) / std::abs(iv);
    vector<vector<string>> rows{{"i_v closed", fmt(iv)},
                                {"i_v from L-values and l_RS", fmt(ivp)},
                                {"relative difference", fmt(rel)},
                                {"i_prime", fmt(i_prime(p))},
                                {"normalization factor", fmt(normalization_factor(p))},
                                {"|l_RS|", fmt(std::abs(ell_rs_closed(p)))}};
    emit(g, render_rows({"quantity", "value"}, rows, report_format_from_string(g.report)));
    return rel <= g.tol ? 0 : 1;
}

int cmd_variance(const Globals& g, const string& kind, long long m1, long long m2, int k1, int k2, const string& k1s,
                 const string& k2s, long long c_max) {
    QuadratureConfig cfg;
    cfg.c_max = c_max;
    try {
        cfg.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    FormResult d;
    NdResult nd;
    if (kind == "incomplete") {
        const auto h1 = parse_kernel(k1s), h2 = parse_kernel(k2s);
        auto atom = [](long long m) {
            return m == 0 ? PoincareAtom{AtomKind::IncompleteEisenstein, 2, 0} : PoincareAtom{AtomKind::IncompleteWeight2k, 2, m};
        };
        d = q_diag(as_combo(atom(m1)), as_combo(atom(m2)), h1, h2, cfg);
        if (m1 != 0 && m2 != 0) nd = q_nondiag(as_combo(atom(m1)), as_combo(atom(m2)), h1, h2, cfg);
    } else if (kind == "holomorphic") {
        d = q_diag_holomorphic(m1, k1, m2, k2, cfg);
        nd = q_nondiag_holomorphic(m1, k1, m2, k2, cfg);
    } else if (kind == "mixed") {
        const auto m = q_mixed(m1, k1, parse_kernel(k2s), m2, cfg);
        d = m.diag;
        nd = m.nondiag;
    } else {
        throw ConfigError("variance kind must be incomplete, holomorphic or mixed");
    }
    vector<vector<string>> rows{{"diag", "", fmt(d.value), fmt(d.tail_estimate)}};
    for (const auto& c : nd.per_c) rows.push_back({"nondiag", std::to_string(c.c), fmt(c.value), fmt(c.bound)});
    rows.push_back({"nondiag_total", "", fmt(nd.value), fmt(nd.tail_estimate)});
    rows.push_back({"total", "", fmt(d.value + nd.value), ""});
    emit(g, render_rows({"term", "c", "value", "error_or_bound"}, rows, report_format_from_string(g.report)));
    return 0;
}

struct HarnessArgs {
    string dataset, format = "jsonl";
    long long synth = 0, n_max = 1000;
    long long m1 = 1, m2 = 1;
    string kernel1 = "bump:1:2", kernel2 = "bump:1:2", weight = "smooth";
    double T = 0;
    bool no_prediction = false;
    long long c_max = 16;
    int target_k = 0;
    double target_t = -1, target_l_half = 0;
    bool have_l_half = false;
};

int cmd_harness(const Globals& g, const HarnessArgs& a) {
    Dataset ds;
    if (!a.dataset.empty()) ds = load_dataset(a.dataset, dataset_format_from_string(a.format));
    else if (a.synth > 0) ds = synth_dataset(g.seed, a.synth, a.n_max);
    else throw ConfigError("harness needs --dataset or --synth");
    for (const auto& w : ds.warnings) std::cerr << "warning: " << w << "\n";
    WeightFn u;
    if (a.weight == "sharp") u.variant = WeightFn::Variant::SharpCutoff;
    else if (a.weight != "smooth") throw ConfigError("weight must be smooth or sharp");
    HarnessConfig cfg;
    cfg.threads = g.threads;
    cfg.quad.c_max = a.c_max;
    cfg.compute_prediction = !a.no_prediction;
    const auto fmtr = report_format_from_string(g.report);
    if (a.target_k > 0 || a.target_t >= 0) {
        EigenformRecord target;
        if (a.target_k > 0) {
            target.kind = EigenformRecord::Kind::Holomorphic;
            target.k = a.target_k;
        } else {
            target.t = a.target_t;
        }
        if (a.have_l_half) target.l_half = a.target_l_half;
        emit(g, render_report(eigenvalue_experiment(ds, target, a.T, u, cfg), fmtr));
        return 0;
    }
    double T = a.T;
    if (T <= 0) {
        double tmax = 0;
        for (const auto& r : ds.records)
            if (r.kind == EigenformRecord::Kind::Maass) tmax = std::max(tmax, r.t);
        if (tmax <= 0) throw ConfigError("no Maass records to pick T from; pass --T");
        T = tmax / weight_horizon(u);
    }
    const auto r = weighted_variance_sum(ds, a.m1, parse_kernel(a.kernel1), a.m2, parse_kernel(a.kernel2), T, u, cfg);
    emit(g, render_report(r, fmtr));
    return r.weyl.pass ? 0 : 1;
}

int cmd_suite(const Globals& g, const string& name) {
    const SuiteReport s = run_suite(name);
    emit(g, render_suite(s, report_format_from_string(g.report)));
    return s.pass() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"qvar: quantum-variance toolkit for the modular surface"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--tol", g.tol, "Relative pass/fail tolerance for route comparisons")->check(CLI::PositiveNumber);
    app.add_option("--threads", g.threads, "Worker threads for per-form evaluations")->check(CLI::Range(1, 256));
    app.add_option("--report", g.report, "Output format")->check(CLI::IsMember({"json", "csv", "table"}));
    app.add_option("--seed", g.seed, "Seed for synthetic data");
    app.add_option("--out", g.out, "Write the report to a file instead of stdout");

    auto* es = app.add_subcommand("expsum", "Exponential-sum identities (or one Kloosterman sum)");
    string identity = "all";
    vector<long long> primes{2, 3, 5, 7};
    long long c_max_es = 30, param_max = 10, km = 0, kn = 0, kc = 0;
    es->add_option("--identity", identity, "scale, scale-twisted, vanish, swap, descent or all");
    es->add_option("--p", primes, "Primes to sweep");
    es->add_option("--c-max", c_max_es, "Largest base modulus")->check(CLI::PositiveNumber);
    es->add_option("--param-max", param_max, "Largest identity parameter")->check(CLI::NonNegativeNumber);
    auto* kl = es->add_option("--kloosterman", kc, "Evaluate S(m, n; c) for this c instead of the sweep");
    es->add_option("--m", km, "m for --kloosterman");
    es->add_option("--n", kn, "n for --kloosterman");

    auto* he = app.add_subcommand("hecke", "Hecke product expansion, or T_n on a Poincare atom");
    long long hn = 2, hm = 1;
    string atom_kind;
    int atom_weight = 0;
    he->add_option("--n", hn, "Hecke index n")->check(CLI::PositiveNumber);
    he->add_option("--m", hm, "Second index, or the atom frequency")->check(CLI::NonNegativeNumber);
    he->add_option("--atom", atom_kind, "Apply T_n to an atom of this kind (hol or inc)");
    he->add_option("--weight", atom_weight, "Atom weight (default 12 holomorphic, 2 incomplete)");

    auto* lf = app.add_subcommand("localfactor", "Archimedean triple-product factors for D_k x pi_it2 x pi_it3");
    int lk = 12;
    double t2 = 0, t3 = 0;
    lf->add_option("--k", lk, "Even weight k >= 2");
    lf->add_option("--t2", t2, "Spectral parameter t2");
    lf->add_option("--t3", t3, "Spectral parameter t3");

    auto* va = app.add_subcommand("variance", "Diagonal and non-diagonal variance forms");
    string vkind = "incomplete", vk1 = "bump:1:2", vk2 = "bump:1:2";
    long long vm1 = 1, vm2 = 1, vc = 16;
    int k1 = 12, k2 = 12;
    va->add_option("--kind", vkind, "incomplete, holomorphic or mixed");
    va->add_option("--m1", vm1, "First frequency");
    va->add_option("--m2", vm2, "Second frequency");
    va->add_option("--k1", k1, "First holomorphic weight");
    va->add_option("--k2", k2, "Second holomorphic weight");
    va->add_option("--kernel1", vk1, "First kernel (bump:a:b, gauss:mu:sigma, power:n:N, meanzero:a:b)");
    va->add_option("--kernel2", vk2, "Second kernel");
    va->add_option("--c-max", vc, "Modulus cutoff of the non-diagonal sum")->check(CLI::PositiveNumber);

    auto* ha = app.add_subcommand("harness", "Weighted variance sum over a dataset");
    HarnessArgs hargs;
    ha->add_option("--dataset", hargs.dataset, "JSONL or CSV dataset");
    ha->add_option("--format", hargs.format, "Dataset format")->check(CLI::IsMember({"jsonl", "csv"}));
    ha->add_option("--synth", hargs.synth, "Use a synthetic dataset with this many forms");
    ha->add_option("--n-max", hargs.n_max, "Hecke range of the synthetic dataset");
    ha->add_option("--m1", hargs.m1, "First frequency");
    ha->add_option("--m2", hargs.m2, "Second frequency");
    ha->add_option("--kernel1", hargs.kernel1, "First kernel");
    ha->add_option("--kernel2", hargs.kernel2, "Second kernel");
    ha->add_option("--weight", hargs.weight, "smooth or sharp");
    ha->add_option("--T", hargs.T, "Spectral scale (default: largest t over the weight horizon)");
    ha->add_option("--c-max", hargs.c_max, "Modulus cutoff of the predicted non-diagonal term");
    ha->add_flag("--no-prediction", hargs.no_prediction, "Skip the predicted limit");
    ha->add_option("--target-k", hargs.target_k, "Predicted eigenvalue for a weight-k holomorphic target");
    ha->add_option("--target-t", hargs.target_t, "Predicted eigenvalue for an even Maass target");
    auto* lh = ha->add_option("--target-l-half", hargs.target_l_half, "L(1/2) of the target");

    auto* su = app.add_subcommand("suite", "Run an invariant suite");
    string suite_name;
    su->add_option("name", suite_name, "expsum-identities, localfactor-routes, whittaker-quadrature, selfadjointness, recurrence")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    try {
        if (*es) return kl->count() ? cmd_kloosterman(g, km, kn, kc) : cmd_expsum(g, identity, primes, c_max_es, param_max);
        if (*he) return cmd_hecke(g, hn, hm, atom_kind, atom_weight);
        if (*lf) return cmd_localfactor(g, lk, t2, t3);
        if (*va) return cmd_variance(g, vkind, vm1, vm2, k1, k2, vk1, vk2, vc);
        if (*ha) {
            hargs.have_l_half = lh->count() > 0;
            return cmd_harness(g, hargs);
        }
        if (*su) return cmd_suite(g, suite_name);
    } catch (const ConfigError& e) {
        std::cerr << "error (" << e.kind() << "): " << e.what() << "\n";
        return 2;
    } catch (const InsufficientRange& e) {
        std::cerr << "error (" << e.kind() << "): " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "error (" << e.kind() << "): " << e.what() << "\n";
        return 2;
    } catch (const IncompatibleSpec& e) {
        std::cerr << "error (" << e.kind() << "): " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
