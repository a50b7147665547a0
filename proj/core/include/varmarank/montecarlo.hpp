#pragma once

#include "varmarank/innovations.hpp"
#include "varmarank/portmanteau.hpp"
#include "varmarank/scores.hpp"
#include "varmarank/varma.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace varmarank {

/// Bivariate VARMA(1,1) null of the simulation study.
VarmaSpec reference_null_spec();
/// Bivariate VARMA(1,2) alternative: the null plus an MA(2) term.
VarmaSpec reference_alternative_spec();

/// One test in an experiment: the Gaussian test, or a rank test with the
/// given scores.
struct MethodSpec {
    TestMethod method = TestMethod::gaussian;
    std::optional<ScoreKind> scores;

    static MethodSpec gaussian() { return {TestMethod::gaussian, std::nullopt}; }
    static MethodSpec rank(ScoreKind kind) { return {TestMethod::rank, kind}; }
    std::string method_name() const;
    std::string scores_name() const;  // "none" for the Gaussian test
    bool operator==(const MethodSpec&) const = default;
};

MethodSpec method_from_string(const std::string& name);  // "gaussian", "vdw", "spearman", "sign"

/// Parallelism width from VARMARANK_THREADS, else the hardware concurrency.
int default_threads();

struct McConfig {
    VarmaSpec null_spec = reference_null_spec();
    VarmaSpec alt_spec = reference_alternative_spec();
    int fit_p = 1;
    int fit_q = 1;
    int n = 500;
    int replications = 200;
    int burn_in = 200;
    std::vector<int> m_values{5, 10, 15, 20, 25};
    std::vector<std::string> densities{"normal", "mixture", "skewt"};
    std::vector<MethodSpec> methods{MethodSpec::gaussian(), MethodSpec::rank(ScoreKind::vdw),
                                    MethodSpec::rank(ScoreKind::spearman), MethodSpec::rank(ScoreKind::sign)};
    std::optional<int> n_R;  // grid radii; auto when unset
    std::uint64_t grid_seed = 7;
    double alpha = 0.05;
    std::uint64_t master_seed = 20240607;
    int threads = 0;  // 0: default_threads()
    MixtureSigma2 mixture_sigma2 = MixtureSigma2::lower_negated;
    bool recompute_k_at_estimate = true;  // K for the test at the R-estimate rather than at the QMLE
    std::optional<double> discretize;
    bool grid_moments = true;  // normalize rank statistics by the grid D rather than its limit

    /// N = 300 replications of length n = 1000 on a 25 x 40 grid.
    static McConfig paper_scale();
    /// Throws std::invalid_argument on an inconsistent configuration.
    void validate() const;
};

/// Counter-based seed of replication rep under density index k.
std::uint64_t replication_seed(std::uint64_t master, int density_index, int rep);

struct ReplicationRecord {
    std::string density;
    int rep = 0;
    std::uint64_t seed = 0;
    // Indexed [method][m]; NaN when that method failed in this replication.
    std::vector<std::vector<double>> statistics;
    std::vector<std::vector<double>> p_values;
    std::vector<std::string> errors;  // one per method, empty on success
};

struct RateRow {
    std::string density;
    std::string method;
    std::string scores;
    int m = 0;
    double rate = 0.0;
    double se = 0.0;
    int N = 0;  // successful replications
    bool operator==(const RateRow&) const = default;
};

struct McResult {
    std::string experiment;  // "size" or "power"
    McConfig config;
    std::vector<RateRow> rows;
    std::vector<ReplicationRecord> log;
    double wall_seconds = 0.0;
    int threads_used = 1;
    int failures = 0;            // failed (replication, method) pairs
    double max_failure_rate = 0.0;
    bool experiment_error = false;  // some method failed in more than 5% of replications
};

McResult run_size_experiment(const McConfig& config);
McResult run_power_experiment(const McConfig& config);

/// Rejection rates recomputed from the replication log.
std::vector<RateRow> recount_rates(const McResult& result);

/// CSV header density,method,scores,m,rate,se,N and one row per rate.
void write_rates_csv(std::ostream& os, const std::vector<RateRow>& rows);
std::vector<RateRow> parse_rates_csv(std::istream& is);

/// Writes <prefix>.csv and <prefix>.json. Throws std::runtime_error on I/O
/// failure.
void emit_results(const McResult& result, const std::string& prefix);

}  // namespace varmarank
