#include "qvar/harness.hpp"

#include "qvar/exp_sums.hpp"
#include "qvar/hecke_alg.hpp"
#include "qvar/local_factors.hpp"
#include "qvar/special_fns.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

using std::string;
using std::vector;
using json = nlohmann::json;

namespace qvar {

namespace {

string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

string rec_prefix(long long i) { return "record " + std::to_string(i) + ": "; }

double u01(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

// lambda(n) for 1 <= n <= N from the entries present in `given`; a missing composite index is
// filled by multiplicativity, a missing prime is a schema error.
vector<double> complete_hecke_table(const std::map<long long, double>& given, long long idx) {
    if (given.empty()) throw SchemaError(rec_prefix(idx) + "empty hecke table");
    const long long N = given.rbegin()->first;
    vector<double> lam(N + 1, 0.0);
    lam[1] = 1.0;
    for (long long n = 1; n <= N; ++n) {
        auto it = given.find(n);
        if (it != given.end()) {
            lam[n] = it->second;
            continue;
        }
        if (n == 1) continue;
        // smallest prime factor p, n = p^r m with p not dividing m
        long long p = 2;
        while (p * p <= n && n % p) ++p;
        if (n % p) p = n;
        if (p == n) throw SchemaError(rec_prefix(idx) + "hecke table misses the prime " + std::to_string(n));
        long long pr = 1;
        long long m = n;
        while (m % p == 0) {
            m /= p;
            pr *= p;
        }
        if (m > 1) {
            lam[n] = lam[pr] * lam[m];
        } else {
            lam[n] = lam[p] * lam[n / p] - (n / p >= p ? lam[n / (p * p)] : 0.0);
        }
    }
    return vector<double>(lam.begin() + 1, lam.end());
}

struct RawRecord {
    EigenformRecord rec;
    vector<double> table; // lambda(1..N) before the lambda(1) = 1 check
};

// Builds the record once the table is known to start with lambda(1) = 1.
EigenformRecord finish_record(RawRecord raw) {
    raw.table[0] = 1.0; // a wrong lambda(1) has already been recorded as a validation issue
    raw.rec.hecke = HeckeEigenvalueMap(raw.table);
    return raw.rec;
}

double number_field(const json& j, const char* key, long long idx) {
    if (!j.contains(key)) throw SchemaError(rec_prefix(idx) + "missing field '" + key + "'");
    if (!j[key].is_number()) throw SchemaError(rec_prefix(idx) + "field '" + key + "' must be a number");
    return j[key].get<double>();
}

RawRecord record_from_json(const json& j, long long idx, vector<string>& warnings) {
    static const std::set<string> known{"kind", "t", "k", "parity", "hecke", "l_sym2", "l_half"};
    if (!j.is_object()) throw SchemaError(rec_prefix(idx) + "a record must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) warnings.push_back(rec_prefix(idx) + "field '" + it.key() + "' ignored");
    RawRecord raw;
    EigenformRecord& r = raw.rec;
    if (!j.contains("kind") || !j["kind"].is_string()) throw SchemaError(rec_prefix(idx) + "missing string field 'kind'");
    const string kind = j["kind"].get<string>();
    if (kind == "maass") {
        r.kind = EigenformRecord::Kind::Maass;
        r.t = number_field(j, "t", idx);
        if (j.contains("parity")) {
            if (!j["parity"].is_number_integer()) throw SchemaError(rec_prefix(idx) + "field 'parity' must be an integer");
            r.parity = j["parity"].get<int>();
        }
    } else if (kind == "hol" || kind == "holomorphic") {
        r.kind = EigenformRecord::Kind::Holomorphic;
        if (!j.contains("k") || !j["k"].is_number_integer())
            throw SchemaError(rec_prefix(idx) + "holomorphic records need an integer field 'k'");
        r.k = j["k"].get<int>();
    } else {
        throw SchemaError(rec_prefix(idx) + "unknown kind '" + kind + "'");
    }
    r.l_sym2 = number_field(j, "l_sym2", idx);
    if (j.contains("l_half") && !j["l_half"].is_null()) r.l_half = number_field(j, "l_half", idx);
    if (!j.contains("hecke") || !j["hecke"].is_object()) throw SchemaError(rec_prefix(idx) + "missing object field 'hecke'");
    std::map<long long, double> given;
    for (auto it = j["hecke"].begin(); it != j["hecke"].end(); ++it) {
        long long n = 0;
        size_t used = 0;
        try {
            n = std::stoll(it.key(), &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != it.key().size() || n < 1) throw SchemaError(rec_prefix(idx) + "hecke key '" + it.key() + "' is not a positive integer");
        if (!it.value().is_number()) throw SchemaError(rec_prefix(idx) + "hecke value at " + it.key() + " must be a number");
        given[n] = it.value().get<double>();
    }
    raw.table = complete_hecke_table(given, idx);
    return raw;
}

vector<string> split(const string& s, char sep) {
    vector<string> out;
    string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

string trim(const string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_number(const string& s, long long idx, const string& what) {
    size_t used = 0;
    double v = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) throw ParseError(rec_prefix(idx) + "cannot read " + what + " from '" + s + "'");
    return v;
}

const vector<string> kCsvColumns{"kind", "t", "k", "parity", "l_sym2", "l_half", "hecke"};

RawRecord record_from_csv(const vector<string>& header, const string& line, long long idx, vector<string>& warnings) {
    const auto cells = split(line, ',');
    if (cells.size() != header.size())
        throw ParseError(rec_prefix(idx) + "expected " + std::to_string(header.size()) + " cells, found " +
                         std::to_string(cells.size()));
    json j = json::object();
    for (size_t c = 0; c < header.size(); ++c) {
        const string& col = header[c];
        const string v = trim(cells[c]);
        if (std::find(kCsvColumns.begin(), kCsvColumns.end(), col) == kCsvColumns.end()) {
            if (!v.empty()) j[col] = v; // reported as ignored
            continue;
        }
        if (v.empty()) continue;
        if (col == "kind") {
            j[col] = v;
        } else if (col == "k" || col == "parity") {
            const double x = parse_number(v, idx, col);
            if (x != std::floor(x)) throw SchemaError(rec_prefix(idx) + "field '" + col + "' must be an integer");
            j[col] = static_cast<long long>(x);
        } else if (col == "hecke") {
            json h = json::object();
            for (const string& pair : split(v, ';')) {
                const auto colon = pair.find(':');
                if (colon == string::npos) throw ParseError(rec_prefix(idx) + "hecke entry '" + pair + "' is not n:value");
                h[trim(pair.substr(0, colon))] = parse_number(trim(pair.substr(colon + 1)), idx, "a hecke value");
            }
            j[col] = h;
        } else {
            j[col] = parse_number(v, idx, col);
        }
    }
    return record_from_json(j, idx, warnings);
}

// Window lambda^{-eps} << L(1, sym^2) << lambda^{eps} with eps = 0.1 and implied constant 10.
void window_warnings(const vector<EigenformRecord>& recs, vector<string>& warnings) {
    for (size_t i = 0; i < recs.size(); ++i) {
        const auto& r = recs[i];
        const double lam = r.kind == EigenformRecord::Kind::Maass ? r.laplace_eigenvalue() : double(r.k) * r.k / 4.0;
        const double w = std::pow(std::max(lam, 1.0), 0.1);
        if (r.l_sym2 > 0 && (r.l_sym2 < 0.1 / w || r.l_sym2 > 10.0 * w))
            warnings.push_back(rec_prefix(i) + "L(1, sym^2) = " + fmt_double(r.l_sym2) + " outside the expected window");
    }
}

bool spectral_less(const EigenformRecord& a, const EigenformRecord& b) {
    if (a.kind != b.kind) return a.kind == EigenformRecord::Kind::Maass;
    return a.kind == EigenformRecord::Kind::Maass ? a.t < b.t : a.k < b.k;
}

json record_json(const EigenformRecord& r) {
    json j;
    if (r.kind == EigenformRecord::Kind::Maass) {
        j["kind"] = "maass";
        j["t"] = r.t;
        j["parity"] = r.parity;
    } else {
        j["kind"] = "hol";
        j["k"] = r.k;
    }
    json h = json::object();
    for (long long n = 2; n <= r.hecke.n_max(); ++n) h[std::to_string(n)] = r.hecke(n);
    j["hecke"] = h;
    j["l_sym2"] = r.l_sym2;
    if (r.l_half) j["l_half"] = *r.l_half;
    return j;
}

} // namespace

DatasetFormat dataset_format_from_string(const string& s) {
    if (s == "jsonl") return DatasetFormat::Jsonl;
    if (s == "csv") return DatasetFormat::Csv;
    throw ConfigError("unknown dataset format '" + s + "' (expected jsonl or csv)");
}

vector<ValidationIssue> validate_records(const vector<EigenformRecord>& records, double tol) {
    vector<ValidationIssue> issues;
    for (size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const long long idx = static_cast<long long>(i);
        if (r.hecke.n_max() < 1) {
            issues.push_back({idx, "empty hecke table"});
            continue;
        }
        if (r.hecke(1) != 1.0) issues.push_back({idx, "lambda(1) = " + fmt_double(r.hecke(1)) + ", expected 1"});
        if (!(r.l_sym2 > 0)) issues.push_back({idx, "l_sym2 must be positive"});
        if (r.kind == EigenformRecord::Kind::Maass) {
            if (!(r.t >= 0) || !std::isfinite(r.t)) issues.push_back({idx, "t must be finite and non-negative"});
            if (r.parity != 1 && r.parity != -1) issues.push_back({idx, "parity must be +1 or -1"});
        } else if (r.k < 12 || r.k % 2 != 0 || dim_cusp_forms(r.k) == 0) {
            issues.push_back({idx, "no cusp forms of weight " + std::to_string(r.k)});
        }
        // lambda(n) lambda(m) = sum_{d | (n, m)} lambda(nm/d^2) for every covered pair
        const long long N = r.hecke.n_max();
        bool bad = false;
        for (long long n = 2; n * n <= N && !bad; ++n)
            for (long long m = n; n * m <= N; ++m) {
                const double lhs = r.hecke(n) * r.hecke(m);
                const double rhs = gcd(n, m) == 1 ? r.hecke(n * m) : hecke_product_value(r.hecke, n, m);
                const double res = std::abs(lhs - rhs);
                if (!(res <= tol)) {
                    issues.push_back({idx, "Hecke multiplicativity fails at (" + std::to_string(n) + ", " + std::to_string(m) +
                                               "): residual " + fmt_double(res)});
                    bad = true;
                    break;
                }
            }
    }
    // duplicate Maass spectral parameters
    vector<size_t> order;
    for (size_t i = 0; i < records.size(); ++i)
        if (records[i].kind == EigenformRecord::Kind::Maass) order.push_back(i);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return records[a].t < records[b].t; });
    for (size_t j = 1; j < order.size(); ++j)
        if (std::abs(records[order[j]].t - records[order[j - 1]].t) <= 1e-9)
            issues.push_back({static_cast<long long>(order[j]),
                              "duplicate spectral parameter t = " + fmt_double(records[order[j]].t) + " (also record " +
                                  std::to_string(order[j - 1]) + ")"});
    std::stable_sort(issues.begin(), issues.end(),
                     [](const ValidationIssue& a, const ValidationIssue& b) { return a.index < b.index; });
    return issues;
}

Dataset parse_dataset(const string& text, DatasetFormat format, const string& provenance) {
    Dataset ds;
    ds.provenance = provenance;
    vector<RawRecord> raws;
    std::istringstream is(text);
    string line;
    long long line_no = 0;
    vector<string> header;
    while (std::getline(is, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const long long idx = static_cast<long long>(raws.size());
        if (format == DatasetFormat::Jsonl) {
            json j;
            try {
                j = json::parse(line);
            } catch (const json::parse_error& e) {
                throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
            }
            raws.push_back(record_from_json(j, idx, ds.warnings));
        } else {
            if (header.empty()) {
                for (const string& h : split(line, ',')) header.push_back(trim(h));
                for (const char* need : {"kind", "hecke", "l_sym2"})
                    if (std::find(header.begin(), header.end(), need) == header.end())
                        throw SchemaError(string("csv header lacks the column '") + need + "'");
                continue;
            }
            raws.push_back(record_from_csv(header, line, idx, ds.warnings));
        }
    }
    // lambda(1) must be checked before the table becomes a HeckeEigenvalueMap
    vector<ValidationIssue> issues;
    for (size_t i = 0; i < raws.size(); ++i)
        if (raws[i].table[0] != 1.0)
            issues.push_back({static_cast<long long>(i), "lambda(1) = " + fmt_double(raws[i].table[0]) + ", expected 1"});
    vector<EigenformRecord> recs;
    for (auto& r : raws) recs.push_back(finish_record(std::move(r)));
    for (auto& v : validate_records(recs)) issues.push_back(v);
    if (!issues.empty()) {
        std::stable_sort(issues.begin(), issues.end(),
                         [](const ValidationIssue& a, const ValidationIssue& b) { return a.index < b.index; });
        string msg = "dataset validation failed:";
        for (const auto& v : issues) msg += "\n  " + rec_prefix(v.index) + v.reason;
        throw ValidationError(msg);
    }
    window_warnings(recs, ds.warnings);
    std::stable_sort(recs.begin(), recs.end(), spectral_less);
    ds.records = std::move(recs);
    ds.n_max = 0;
    for (size_t i = 0; i < ds.records.size(); ++i)
        ds.n_max = i == 0 ? ds.records[i].hecke.n_max() : std::min(ds.n_max, ds.records[i].hecke.n_max());
    return ds;
}

Dataset load_dataset(const string& path, DatasetFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open dataset '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_dataset(ss.str(), format, path);
}

string dataset_to_jsonl(const Dataset& ds) {
    string out;
    for (const auto& r : ds.records) out += record_json(r).dump() + "\n";
    return out;
}

string dataset_to_csv(const Dataset& ds) {
    string out = "kind,t,k,parity,l_sym2,l_half,hecke\n";
    for (const auto& r : ds.records) {
        const bool maass = r.kind == EigenformRecord::Kind::Maass;
        out += maass ? "maass," + fmt_double(r.t) + ",," + std::to_string(r.parity) : "hol,," + std::to_string(r.k) + ",";
        out += "," + fmt_double(r.l_sym2) + "," + (r.l_half ? fmt_double(*r.l_half) : string()) + ",";
        for (long long n = 2; n <= r.hecke.n_max(); ++n) out += (n > 2 ? ";" : "") + std::to_string(n) + ":" + fmt_double(r.hecke(n));
        out += "\n";
    }
    return out;
}

Dataset synth_dataset(std::uint64_t seed, long long count, long long n_max) {
    if (count < 1) throw ConfigError("synth_dataset: count must be >= 1");
    if (n_max < 2) throw ConfigError("synth_dataset: n_max must be >= 2");
    std::mt19937_64 rng(seed);
    const auto primes = primes_up_to(n_max);
    Dataset ds;
    ds.provenance = "synthetic seed=" + std::to_string(seed) + " count=" + std::to_string(count) +
                    " n_max=" + std::to_string(n_max);
    ds.n_max = n_max;
    for (long long j = 1; j <= count; ++j) {
        EigenformRecord r;
        r.kind = EigenformRecord::Kind::Maass;
        const double jitter = 0.5 * u01(rng) - 0.25;
        r.t = std::sqrt(12.0 * (double(j) - 0.5 + jitter));
        r.parity = u01(rng) < 0.5 ? 1 : -1;
        r.l_sym2 = 0.5 + 1.5 * u01(rng);
        std::map<long long, double> lp;
        for (long long p : primes) lp[p] = 4.0 * u01(rng) - 2.0;
        r.hecke = hecke_map_from_primes([&](long long p) { return lp.at(p); }, n_max);
        ds.records.push_back(std::move(r));
    }
    return ds;
}

string dataset_hash(const Dataset& ds) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : dataset_to_jsonl(ds)) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

WeylCheck weyl_law_check(const Dataset& ds, double tolerance) {
    WeylCheck w;
    w.tolerance = tolerance;
    vector<double> ts;
    for (const auto& r : ds.records)
        if (r.kind == EigenformRecord::Kind::Maass) ts.push_back(r.t);
    std::sort(ts.begin(), ts.end());
    const long long n = static_cast<long long>(ts.size());
    if (n < 10) return w; // too few forms to say anything
    for (int f = 5; f <= 10; ++f) {
        const long long kth = std::max<long long>(1, (n * f + 9) / 10);
        const double T = ts[kth - 1];
        const long long cnt = std::upper_bound(ts.begin(), ts.end(), T) - ts.begin();
        const double expect = T * T / 12.0;
        w.T.push_back(T);
        w.count.push_back(cnt);
        w.expected.push_back(expect);
        w.max_rel_dev = std::max(w.max_rel_dev, std::abs(double(cnt) - expect) / expect);
    }
    w.pass = w.max_rel_dev <= tolerance;
    return w;
}

double weight_horizon(const WeightFn& u) {
    if (u.variant == WeightFn::Variant::SharpCutoff) return 1.0;
    const double peak = u(std::sqrt(5.0));
    double lo = std::sqrt(5.0), hi = 20.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (u(mid) > 1e-11 * peak ? lo : hi) = mid;
    }
    return hi;
}

namespace {

PoincareAtom incomplete_atom(long long m) {
    return m == 0 ? PoincareAtom{AtomKind::IncompleteEisenstein, 2, 0} : PoincareAtom{AtomKind::IncompleteWeight2k, 2, m};
}

// Runs job(i) for i in [0, n) on a fixed contiguous partition; rethrows the failure of
// the smallest index so the outcome does not depend on scheduling.
template <class Job>
void parallel_for(long long n, int threads, const Job& job) {
    threads = std::max(1, std::min<int>(threads, static_cast<int>(std::max<long long>(n, 1))));
    vector<std::exception_ptr> errs(n);
    auto run = [&](long long lo, long long hi) {
        for (long long i = lo; i < hi; ++i) {
            try {
                job(i);
            } catch (...) {
                errs[i] = std::current_exception();
            }
        }
    };
    if (threads == 1) {
        run(0, n);
    } else {
        const long long chunk = (n + threads - 1) / threads;
        vector<std::thread> pool;
        for (int k = 0; k < threads; ++k) {
            const long long lo = k * chunk, hi = std::min(n, lo + chunk);
            if (lo < hi) pool.emplace_back(run, lo, hi);
        }
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errs)
        if (e) std::rethrow_exception(e);
}

std::map<string, string> quad_echo(const QuadratureConfig& q) {
    return {{"c_max", std::to_string(q.c_max)},
            {"nd_xi_max", fmt_double(q.nd_xi_max)},
            {"xi_max", fmt_double(q.xi_max)},
            {"nodes_xi", std::to_string(q.nodes_xi)},
            {"nodes_tau", std::to_string(q.nodes_tau)},
            {"q_max", std::to_string(q.q_max)},
            {"d_max", std::to_string(q.d_max)},
            {"abs_tol", fmt_double(q.abs_tol)},
            {"h2_normalization", q.h2 == H2Normalization::OmegaPipeline ? "omega_pipeline" : "kernel_definition"}};
}

constexpr const char* kLimitStatus = "prediction-only";

} // namespace

VarianceReport weighted_variance_sum(const Dataset& ds, long long m1, const KernelFn& h1, long long m2,
                                     const KernelFn& h2, double T, const WeightFn& u, const HarnessConfig& cfg) {
    cfg.quad.validate();
    h1.validate();
    h2.validate();
    if (!(T > 0)) throw ConfigError("weighted_variance_sum: T must be positive");
    if (m1 < 0 || m2 < 0) throw ConfigError("weighted_variance_sum: frequencies must be non-negative");
    VarianceReport r;
    r.experiment = "weighted_variance_sum";
    r.T = T;
    r.weight_fn = u.id();
    r.limit_status = kLimitStatus;
    r.dataset_hash = dataset_hash(ds);
    r.dataset_count = static_cast<long long>(ds.records.size());
    r.weyl = weyl_law_check(ds);
    r.config = quad_echo(cfg.quad);
    r.config["m1"] = std::to_string(m1);
    r.config["m2"] = std::to_string(m2);
    r.config["h1"] = h1.str();
    r.config["h2"] = h2.str();
    r.config["bound_exponent"] = std::to_string(cfg.bound_exponent);

    vector<const EigenformRecord*> maass;
    for (const auto& rec : ds.records)
        if (rec.kind == EigenformRecord::Kind::Maass) maass.push_back(&rec);
    if (!maass.empty()) {
        double tmax = 0;
        for (auto* f : maass) tmax = std::max(tmax, f->t);
        const double need = weight_horizon(u) * T;
        if (tmax < need * (1.0 - 1e-12)) {
            // forms missing between t_max and the horizon, by the Weyl law
            const long long missing = static_cast<long long>(std::ceil((need * need - tmax * tmax) / 12.0));
            throw InsufficientRange("weighted_variance_sum: records stop at t = " + fmt_double(tmax) +
                                        " but the weight needs t up to " + fmt_double(need),
                                    std::max<long long>(missing, 1));
        }
    }
    const bool same = m1 == m2 && h1.str() == h2.str();
    r.per_form.resize(maass.size());
    parallel_for(static_cast<long long>(maass.size()), cfg.threads, [&](long long i) {
        const auto& f = *maass[i];
        FormOmega& o = r.per_form[i];
        o.index = i;
        o.t = f.t;
        o.l_sym2 = f.l_sym2;
        o.weight = u(f.t / T) * f.l_sym2;
        const OmegaResult w1 = omega_poincare(f, m1, h1, cfg.quad);
        o.omega1 = w1.value;
        o.q_terms = w1.q_terms;
        if (same) {
            o.omega2 = o.omega1;
        } else {
            const OmegaResult w2 = omega_poincare(f, m2, h2, cfg.quad);
            o.omega2 = w2.value;
            o.q_terms += w2.q_terms;
        }
    });
    double sum = 0;
    for (const auto& o : r.per_form) sum += o.weight * (o.omega1 * o.omega2); // symmetric in 1 <-> 2
    r.weighted_sum = sum / T;

    std::ostringstream note;
    note << "The limiting variance is not reproducible at finite T; 'predicted' is the T -> infinity value and "
            "'residual' is informational only.";
    if (cfg.compute_prediction) {
        const auto s1 = as_combo(incomplete_atom(m1)), s2 = as_combo(incomplete_atom(m2));
        try {
            r.predicted_diag = q_diag(s1, s2, h1, h2, cfg.quad).value;
            if (m1 != 0 && m2 != 0) {
                const NdResult nd = q_nondiag(s1, s2, h1, h2, cfg.quad);
                r.predicted_nondiag = nd.value;
                if (!nd.converged) note << " The non-diagonal c-sum did not meet its tail criterion.";
            } else {
                note << " No non-diagonal term is computed for m = 0.";
            }
            const double q = r.predicted_diag + r.predicted_nondiag;
            r.predicted = u.integral() * q;
            const double A = cfg.bound_exponent;
            r.bound_ratio = std::abs(q) / (std::pow(double((m1 + 1) * (m2 + 1)), A) * h1.norm_a(cfg.bound_exponent) *
                                           h2.norm_a(cfg.bound_exponent));
        } catch (const Error& e) {
            note << " Prediction unavailable: " << e.what();
        }
        r.residual = r.weighted_sum - r.predicted;
    } else {
        note << " Prediction not requested.";
    }
    r.note = note.str();
    return r;
}

VarianceReport eigenvalue_experiment(const Dataset& ds, const EigenformRecord& target, double T, const WeightFn& u,
                                     const HarnessConfig& cfg) {
    if (!target.l_half) throw DomainError("eigenvalue_experiment: the target needs L(1/2)");
    VarianceReport r;
    r.experiment = "eigenvalue_experiment";
    r.T = T;
    r.weight_fn = u.id();
    r.limit_status = kLimitStatus;
    r.dataset_hash = dataset_hash(ds);
    r.dataset_count = static_cast<long long>(ds.records.size());
    r.weyl = weyl_law_check(ds);
    r.config = quad_echo(cfg.quad);
    r.config["target_l_half"] = fmt_double(*target.l_half);
    if (target.kind == EigenformRecord::Kind::Holomorphic) {
        r.config["target"] = "hol k=" + std::to_string(target.k);
        r.predicted = prop6_constant(target.k) * *target.l_half;
    } else {
        if (target.parity != 1) throw DomainError("eigenvalue_experiment: the Maass target must be even");
        r.config["target"] = "maass t=" + fmt_double(target.t);
        r.predicted = prop7_constant(target.t) * *target.l_half;
    }
    r.note = "Predicted variance eigenvalue of the target; the empirical side needs omega_j of the target "
             "observable itself, which is not computed here, and the T -> infinity limit is not reproducible "
             "at desk scale.";
    return r;
}

// ---------------------------------------------------------------- suites

long long SuiteReport::failures() const {
    return std::count_if(cases.begin(), cases.end(), [](const SuiteCase& c) { return !c.pass; });
}

vector<string> suite_names() {
    return {"expsum-identities", "localfactor-routes", "whittaker-quadrature", "selfadjointness", "recurrence"};
}

namespace {

double rel_err(Cplx a, Cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

void add_case(SuiteReport& s, string id, double err, double tol, string note = "") {
    s.cases.push_back({std::move(id), err, tol, err <= tol, std::move(note)});
}

void add_identity(SuiteReport& s, const IdentityCheck& c) {
    string id = c.identity + " p=" + std::to_string(c.p);
    for (long long v : c.params) id += " " + std::to_string(v);
    s.cases.push_back({id, c.diff, c.tol, c.pass, c.note});
}

string triple_id(const char* what, const TripleParams& p) {
    return string(what) + " k=" + std::to_string(p.k) + " t2=" + fmt_double(p.t2) + " t3=" + fmt_double(p.t3);
}

void suite_expsum(SuiteReport& s) {
    const long long P[] = {2, 3, 5};
    for (long long p : P)
        for (long long c = 1; c <= 30; ++c)
            for (long long a = 0; a <= 4; ++a)
                for (long long b = 0; b <= 4; ++b) {
                    try {
                        add_identity(s, identity_scale(p, c, a, b));
                    } catch (const ConditionViolated&) {
                    }
                    try {
                        add_identity(s, identity_scale_twisted(p, c, a, b));
                    } catch (const ConditionViolated&) {
                    }
                    try {
                        add_identity(s, identity_swap(p, c, a, b));
                    } catch (const ConditionViolated&) {
                    }
                    if (c * p * p <= 30 * 25) {
                        try {
                            add_identity(s, identity_vanish(p, c, a, b));
                        } catch (const ConditionViolated&) {
                        }
                    }
                    if (c <= 10) {
                        try {
                            add_identity(s, identity_descent(p, c, a, b));
                        } catch (const ConditionViolated&) {
                        }
                    }
                }
}

void suite_localfactor(SuiteReport& s) {
    for (int k : {2, 4, 12, 20})
        for (double t2 : {0.0, 0.5, 1.0, 5.0, 13.7798})
            for (double t3 : {0.0, 0.5, 1.0, 5.0, 13.7798}) {
                const TripleParams p{k, t2, t3};
                add_case(s, triple_id("i_v routes", p), rel_err(i_v_product(p), i_v(p)), 1e-10);
                add_case(s, triple_id("normalization routes", p), rel_err(normalization_factor_rep(p), normalization_factor(p)),
                         1e-10);
                add_case(s, triple_id("triple L routes", p), rel_err(triple_L(2.0, p), triple_L_product(2.0, p)), 1e-12);
            }
    for (int k : {12, 20})
        for (double t : {0.0, 1.0, 5.0})
            add_case(s, "watson routes k=" + std::to_string(k) + " t=" + fmt_double(t),
                     rel_err(watson_infty_factor_rep(k, t), watson_infty_factor(k, t)), 1e-10);
}

void suite_whittaker(SuiteReport& s) {
    const SpecialFnAccuracy acc{1e-300, 1e-10, 4096};
    for (int k : {2, 4, 12, 20})
        add_case(s, "hol norm k=" + std::to_string(k), rel_err(whittaker_norm_hol_quadrature(k), whittaker_norm_hol(k)), 1e-6);
    for (double t : {0.0, 0.5, 3.0, 15.0})
        add_case(s, "maass norm t=" + fmt_double(t),
                 rel_err(whittaker_norm_maass_quadrature(t), whittaker_norm_maass(t)), 1e-6);
    for (Cplx sv : {Cplx(1, 0), Cplx(1.5, 3)})
        for (int k : {2, 12})
            add_case(s, "hol Mellin pair k=" + std::to_string(k) + " s=" + fmt_double(sv.real()) + "+" + fmt_double(sv.imag()) + "i",
                     rel_err(mellin_pair_hol_quadrature(sv, k, 4, acc), mellin_pair_hol(sv, k, 4)), 1e-6);
    for (Cplx sv : {Cplx(1, 0), Cplx(2.5, 0)})
        for (auto [t1, t2] : {std::pair{0.0, 0.0}, std::pair{1.0, 2.0}, std::pair{4.0, 4.0}})
            add_case(s, "K-Bessel Mellin pair s=" + fmt_double(sv.real()) + " t1=" + fmt_double(t1) + " t2=" + fmt_double(t2),
                     rel_err(mellin_kbessel_pair_quadrature(sv, t1, t2, acc), mellin_kbessel_pair(sv, t1, t2)), 1e-6);
    for (auto p : {TripleParams{2, 0, 0}, TripleParams{12, 5.0, 0}, TripleParams{12, 0.5, -1}, TripleParams{20, 1, 13.7798}})
        add_case(s, triple_id("l_RS", p), rel_err(ell_rs_quadrature(p, acc), ell_rs_closed(p)), 1e-6);
}

void suite_selfadjoint(SuiteReport& s) {
    const auto h = KernelFn::bump(1, 2);
    for (long long p : {2, 3})
        for (long long m1 : {1, 5})
            for (long long m2 : {1, 5}) {
                if ((m1 * m2) % p == 0) continue;
                const string tag = " p=" + std::to_string(p) + " m1=" + std::to_string(m1) + " m2=" + std::to_string(m2);
                const auto a = selfadjoint_holomorphic(p, m1, m2, 12);
                s.cases.push_back({"holomorphic k=12" + tag, a.rel_diff, 1e-6, a.pass, a.note});
                const auto b = selfadjoint_incomplete(p, m1, m2, h, h);
                s.cases.push_back({"incomplete bump(1,2)" + tag, b.rel_diff, 1e-6, b.pass, b.note});
            }
}

void suite_recurrence(SuiteReport& s) {
    for (double sv : {2.0, 2.5, 3.0})
        for (double t : {0.0, 0.5, 1.0})
            for (double ratio : {1.0, 1.2, 1.5}) {
                const string tag = " s=" + fmt_double(sv) + " t=" + fmt_double(t) + " ratio=" + fmt_double(ratio);
                add_case(s, "A_1 relation" + tag, a1_relation(sv, t, ratio).residual, 1e-5);
                add_case(s, "A_-1 relation" + tag, am1_relation(sv, t, ratio).residual, 1e-5);
                add_case(s, "recurrence k=1" + tag, a_k_recurrence_check(1, sv, t, ratio).residual, 1e-5);
                add_case(s, "recurrence k=2" + tag, a_k_recurrence_check(2, sv, t, ratio).residual, 1e-5);
            }
}

} // namespace

SuiteReport run_suite(const string& name) {
    SuiteReport s;
    s.name = name;
    if (name == "expsum-identities") suite_expsum(s);
    else if (name == "localfactor-routes") suite_localfactor(s);
    else if (name == "whittaker-quadrature") suite_whittaker(s);
    else if (name == "selfadjointness") suite_selfadjoint(s);
    else if (name == "recurrence") suite_recurrence(s);
    else {
        string known;
        for (const auto& n : suite_names()) known += (known.empty() ? "" : ", ") + n;
        throw ConfigError("unknown suite '" + name + "' (known: " + known + ")");
    }
    return s;
}

// ---------------------------------------------------------------- rendering

ReportFormat report_format_from_string(const string& s) {
    if (s == "json") return ReportFormat::Json;
    if (s == "csv") return ReportFormat::Csv;
    if (s == "table") return ReportFormat::Table;
    throw ConfigError("unknown report format '" + s + "' (expected json, csv or table)");
}

namespace {

json weyl_json(const WeylCheck& w) {
    json j;
    j["T"] = w.T;
    j["count"] = w.count;
    j["expected"] = w.expected;
    j["max_rel_dev"] = w.max_rel_dev;
    j["tolerance"] = w.tolerance;
    j["pass"] = w.pass;
    return j;
}

string csv_escape(const string& s) {
    if (s.find_first_of(",\"\n") == string::npos) return s;
    string out = "\"";
    for (char c : s) out += c == '"' ? string("\"\"") : string(1, c);
    return out + "\"";
}

} // namespace

string render_report(const VarianceReport& r, ReportFormat f) {
    if (f == ReportFormat::Json) {
        json j;
        j["experiment"] = r.experiment;
        j["T"] = r.T;
        j["weight_fn"] = r.weight_fn;
        j["weighted_sum"] = r.weighted_sum;
        j["predicted"] = r.predicted;
        j["predicted_diag"] = r.predicted_diag;
        j["predicted_nondiag"] = r.predicted_nondiag;
        j["residual"] = r.residual;
        j["bound_ratio"] = r.bound_ratio;
        j["limit_status"] = r.limit_status;
        j["note"] = r.note;
        j["weyl_law"] = weyl_json(r.weyl);
        j["dataset"] = {{"hash", r.dataset_hash}, {"count", r.dataset_count}};
        j["config"] = r.config;
        json pf = json::array();
        for (const auto& o : r.per_form)
            pf.push_back({{"index", o.index}, {"t", o.t}, {"l_sym2", o.l_sym2}, {"weight", o.weight},
                          {"omega1", o.omega1}, {"omega2", o.omega2}, {"q_terms", o.q_terms}});
        j["per_form"] = pf;
        return j.dump(2) + "\n";
    }
    std::ostringstream os;
    if (f == ReportFormat::Csv) {
        os << "# experiment=" << r.experiment << "\n# T=" << fmt_double(r.T) << "\n# weight_fn=" << r.weight_fn
           << "\n# weighted_sum=" << fmt_double(r.weighted_sum) << "\n# predicted=" << fmt_double(r.predicted)
           << "\n# residual=" << fmt_double(r.residual) << "\n# limit_status=" << r.limit_status
           << "\n# weyl_law_pass=" << (r.weyl.pass ? "true" : "false") << "\n# dataset_hash=" << r.dataset_hash << "\n";
        os << "index,t,l_sym2,weight,omega1,omega2,q_terms\n";
        for (const auto& o : r.per_form)
            os << o.index << "," << fmt_double(o.t) << "," << fmt_double(o.l_sym2) << "," << fmt_double(o.weight) << ","
               << fmt_double(o.omega1) << "," << fmt_double(o.omega2) << "," << o.q_terms << "\n";
        return os.str();
    }
    char buf[256];
    os << "experiment      " << r.experiment << "\n";
    std::snprintf(buf, sizeof buf, "T               %.10g\nweight          %s\nforms           %zu\n", r.T,
                  r.weight_fn.c_str(), r.per_form.size());
    os << buf;
    std::snprintf(buf, sizeof buf, "weighted sum    % .12e\npredicted       % .12e   [%s]\nresidual        % .12e\n",
                  r.weighted_sum, r.predicted, r.limit_status.c_str(), r.residual);
    os << buf;
    std::snprintf(buf, sizeof buf, "Weyl law        max deviation %.4f (tolerance %.2f) %s\n", r.weyl.max_rel_dev,
                  r.weyl.tolerance, r.weyl.pass ? "PASS" : "FAIL");
    os << buf << "dataset hash    " << r.dataset_hash << "\n" << r.note << "\n";
    if (!r.per_form.empty()) {
        os << "\n   index            t       weight          omega1          omega2\n";
        for (const auto& o : r.per_form) {
            std::snprintf(buf, sizeof buf, "%8lld %12.6f %12.5e % 15.8e % 15.8e\n", o.index, o.t, o.weight, o.omega1,
                          o.omega2);
            os << buf;
        }
    }
    return os.str();
}

string render_suite(const SuiteReport& r, ReportFormat f) {
    if (f == ReportFormat::Json) {
        json j;
        j["name"] = r.name;
        j["failures"] = r.failures();
        j["pass"] = r.pass();
        json cs = json::array();
        for (const auto& c : r.cases)
            cs.push_back({{"id", c.id}, {"error", c.error}, {"tol", c.tol}, {"pass", c.pass}, {"note", c.note}});
        j["cases"] = cs;
        return j.dump(2) + "\n";
    }
    std::ostringstream os;
    if (f == ReportFormat::Csv) {
        os << "suite,id,error,tol,pass,note\n";
        for (const auto& c : r.cases)
            os << r.name << "," << csv_escape(c.id) << "," << fmt_double(c.error) << "," << fmt_double(c.tol) << ","
               << (c.pass ? "true" : "false") << "," << csv_escape(c.note) << "\n";
        return os.str();
    }
    size_t w = 10;
    for (const auto& c : r.cases) w = std::max(w, c.id.size());
    char buf[64];
    for (const auto& c : r.cases) {
        std::snprintf(buf, sizeof buf, "  %.3e  %.1e  %s", c.error, c.tol, c.pass ? "PASS" : "FAIL");
        os << c.id << string(w - c.id.size(), ' ') << buf << "\n";
    }
    os << r.name << ": " << r.cases.size() - r.failures() << "/" << r.cases.size() << " passed\n";
    return os.str();
}

} // namespace qvar
