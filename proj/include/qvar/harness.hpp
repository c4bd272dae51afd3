// Dataset ingestion and validation, the synthetic Weyl-law dataset, the
// weighted variance-sum experiment, the predicted-eigenvalue report, the
// per-module invariant suites and the report writers used by the CLI.
#pragma once

#include "qvar/eigenform.hpp"
#include "qvar/variance_kernels.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace qvar {

struct Dataset {
    std::vector<EigenformRecord> records; // Maass records sorted by t, then holomorphic by k
    std::string provenance;
    long long n_max = 0;                  // smallest Hecke range over the records
    std::vector<std::string> warnings;    // ignored fields, L(1, sym^2) outside its window, ...
};

enum class DatasetFormat { Jsonl, Csv };
DatasetFormat dataset_format_from_string(const std::string& s); // "jsonl" | "csv", else ConfigError

struct ValidationIssue {
    long long index = 0; // record index in file order
    std::string reason;
};

// Checks lambda(1) = 1, multiplicativity over every covered pair (n, m) with nm <= n_max,
// and duplicate spectral parameters.  Returns every failure, not only the first.
std::vector<ValidationIssue> validate_records(const std::vector<EigenformRecord>& records,
                                              double multiplicativity_tol = 1e-6);

/**
 * @brief Loads a JSONL or CSV dataset.
 *
 * ParseError for malformed lines, SchemaError for missing or mistyped fields,
 * ValidationError (listing every record index and reason) when validation fails.
 * An empty file gives an empty dataset.
 */
Dataset load_dataset(const std::string& path, DatasetFormat format);
Dataset parse_dataset(const std::string& text, DatasetFormat format, const std::string& provenance = "");

// Serializations read back by parse_dataset.
std::string dataset_to_jsonl(const Dataset& ds);
std::string dataset_to_csv(const Dataset& ds);

/**
 * @brief count Maass records with t_j = sqrt(12 (j - 1/2 + e_j)), e_j uniform in [-1/4, 1/4],
 * lambda(p) uniform in [-2, 2] extended by the Hecke recursion, L(1, sym^2) uniform in [0.5, 2].
 * Uses mt19937_64 with an explicit 53-bit mantissa draw, so the output depends only on the seed.
 */
Dataset synth_dataset(std::uint64_t seed, long long count, long long n_max);

// 64-bit FNV-1a over the canonical JSONL serialization, as 16 hex digits.
std::string dataset_hash(const Dataset& ds);

struct WeylCheck {
    std::vector<double> T;        // checkpoints
    std::vector<long long> count; // #{t_j <= T}
    std::vector<double> expected; // T^2 / 12
    double max_rel_dev = 0;
    double tolerance = 0.2;
    bool pass = false;
};
// Compares the counting function of the Maass records with T^2/12 at checkpoints where at
// least half of the records (and >= 10 of them) are counted.
WeylCheck weyl_law_check(const Dataset& ds, double tolerance = 0.2);

// Support of u in units of T: beyond horizon * T the weight is below 1e-11 of its peak.
double weight_horizon(const WeightFn& u);

struct FormOmega {
    long long index = 0;
    double t = 0;
    double l_sym2 = 0;
    double weight = 0; // u(t/T) L(1, sym^2)
    double omega1 = 0, omega2 = 0;
    long long q_terms = 0;
};

struct HarnessConfig {
    QuadratureConfig quad;
    int threads = 1;
    int bound_exponent = 2; // A in |Q| / ((|m1|+1)(|m2|+1))^A ||h1||_A ||h2||_A
    bool compute_prediction = true;
};

struct VarianceReport {
    std::string experiment;
    std::vector<FormOmega> per_form;
    double weighted_sum = 0;
    double T = 0;
    std::string weight_fn;
    double predicted = 0; // int u * (Q_diag + Q_nondiag)
    double predicted_diag = 0, predicted_nondiag = 0;
    double residual = 0;  // weighted_sum - predicted, informational
    double bound_ratio = 0;
    std::string limit_status; // always "prediction-only" for the T -> infinity limit
    std::string note;
    WeylCheck weyl;
    std::string dataset_hash;
    long long dataset_count = 0;
    std::map<std::string, std::string> config; // echo, sorted keys
};

/**
 * @brief (1/T) sum_j u(t_j/T) L(1, sym^2 phi_j) omega_j(P_{h1,m1,2}) omega_j(P_{h2,m2,2}).
 *
 * omega_j for each form is evaluated in parallel on a fixed partition; the sum is taken
 * in record order, so the result does not depend on the thread count.  Throws
 * InsufficientRange when the Maass records stop short of T times the horizon of u.
 */
VarianceReport weighted_variance_sum(const Dataset& ds, long long m1, const KernelFn& h1, long long m2,
                                     const KernelFn& h2, double T, const WeightFn& u, const HarnessConfig& cfg = {});

/**
 * @brief Predicted variance eigenvalue for a holomorphic (prop6_constant(k) L(1/2, f)) or an even
 * Maass (prop7_constant(t) L(1/2, phi)) target.  The empirical side would need the
 * observable built from the target itself, so the report is prediction-only.
 * Throws DomainError when target.l_half is missing.
 */
VarianceReport eigenvalue_experiment(const Dataset& ds, const EigenformRecord& target, double T, const WeightFn& u,
                                     const HarnessConfig& cfg = {});

struct SuiteCase {
    std::string id;
    double error = 0; // the quantity compared with tol
    double tol = 0;
    bool pass = false;
    std::string note;
};

struct SuiteReport {
    std::string name;
    std::vector<SuiteCase> cases;
    long long failures() const;
    bool pass() const { return failures() == 0; }
};

std::vector<std::string> suite_names();
// ConfigError for an unknown name.
SuiteReport run_suite(const std::string& name);

enum class ReportFormat { Json, Csv, Table };
ReportFormat report_format_from_string(const std::string& s); // "json" | "csv" | "table"

// Canonical JSON (sorted keys, round-trip doubles), flat CSV, or an aligned text table.
std::string render_report(const VarianceReport& r, ReportFormat f);
std::string render_suite(const SuiteReport& r, ReportFormat f);

} // namespace qvar
