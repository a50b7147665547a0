#include "varmarank/montecarlo.hpp"

#include "format.hpp"
#include "varmarank/center_outward.hpp"
#include "varmarank/estimation.hpp"
#include "varmarank/io.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <mutex>
#include <exception>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace varmarank {

VarmaSpec reference_null_spec() {
    VarmaSpec s;
    s.d = 2;
    Matrix a(2, 2), b(2, 2);
    a << 0.5, 0.2, -0.1, 0.4;
    b << 0.3, 0.0, 0.0, 0.4;
    s.ar = {a};
    s.ma = {b};
    return s;
}

VarmaSpec reference_alternative_spec() {
    VarmaSpec s = reference_null_spec();
    Matrix b2(2, 2);
    b2 << 0.07, 0.03, -0.02, 0.1;
    s.ma.push_back(b2);
    return s;
}

std::string MethodSpec::method_name() const { return to_string(method); }

std::string MethodSpec::scores_name() const { return scores ? to_string(*scores) : "none"; }

MethodSpec method_from_string(const std::string& name) {
    if (name == "gaussian") return MethodSpec::gaussian();
    return MethodSpec::rank(score_kind_from_string(name));
}

int default_threads() {
    if (const char* env = std::getenv("VARMARANK_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1 && v <= 4096) return static_cast<int>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

McConfig McConfig::paper_scale() {
    McConfig c;
    c.n = 1000;
    c.replications = 300;
    c.n_R = 25;
    return c;
}

void McConfig::validate() const {
    if (n < 2) throw std::invalid_argument("McConfig: n must be at least 2");
    if (replications < 1) throw std::invalid_argument("McConfig: replications must be positive");
    if (burn_in < 0) throw std::invalid_argument("McConfig: burn_in must be non-negative");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("McConfig: alpha must lie in (0, 1)");
    if (fit_p < 0 || fit_q < 0) throw std::invalid_argument("McConfig: fit orders must be non-negative");
    if (threads < 0) throw std::invalid_argument("McConfig: threads must be non-negative");
    if (null_spec.d != alt_spec.d) throw std::invalid_argument("McConfig: null and alternative dimensions differ");
    require_valid(null_spec);
    require_valid(alt_spec);
    for (int m : m_values) {
        degrees_of_freedom(null_spec.d, m, fit_p, fit_q);
        if (m > n - 1) throw std::invalid_argument("McConfig: m exceeds n - 1");
    }
    for (const auto& dens : densities) make_named_sampler(dens, null_spec.d);
    for (const auto& method : methods) {
        if (method.method == TestMethod::rank && !method.scores) {
            throw std::invalid_argument("McConfig: rank methods need a score kind");
        }
        if (method.scores == ScoreKind::custom) throw std::invalid_argument("McConfig: custom scores are not supported");
    }
    if (n_R) make_grid(n, null_spec.d, n_R, grid_seed);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

InnovationSampler sampler_for(const std::string& density, const McConfig& config) {
    if (innovation_kind_from_string(density) == InnovationKind::gaussian_mixture) {
        if (config.null_spec.d != 2) throw std::invalid_argument("the three-component mixture is bivariate");
        return InnovationSampler::three_gaussian_mixture(config.mixture_sigma2);
    }
    return make_named_sampler(density, config.null_spec.d);
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Runs every configured test on one simulated series. Methods share the
// series and the QMLE; each rank method owns its R-estimate.
ReplicationRecord run_replication(const McConfig& config, const VarmaSpec& dgp, const InnovationSampler& sampler,
                                  const Grid& grid, const std::vector<ScoreSpec>& score_specs,
                                  const std::string& density, int density_index, int rep) {
    ReplicationRecord rec;
    rec.density = density;
    rec.rep = rep;
    rec.seed = replication_seed(config.master_seed, density_index, rep);
    const std::size_t n_methods = config.methods.size();
    const std::size_t n_m = config.m_values.size();
    rec.statistics.assign(n_methods, std::vector<double>(n_m, kNaN));
    rec.p_values.assign(n_methods, std::vector<double>(n_m, kNaN));
    rec.errors.assign(n_methods, "");

    SeriesData series;
    QmleFit fit;
    try {
        series = simulate(dgp, config.n, sampler, rec.seed, config.burn_in).series;
        fit = qmle(series, config.fit_p, config.fit_q);
        if (!fit.converged) throw std::runtime_error("QMLE did not converge: " + fit.message);
    } catch (const std::exception& e) {
        for (auto& err : rec.errors) err = e.what();
        return rec;
    }

    for (std::size_t k = 0; k < n_methods; ++k) {
        const MethodSpec& method = config.methods[k];
        try {
            if (method.method == TestMethod::gaussian) {
                const Matrix z = residuals(series, fit.theta_hat).z;
                for (std::size_t j = 0; j < n_m; ++j) {
                    const auto r = gaussian_stat_from_residuals(z, fit.sigma_hat, config.m_values[j], config.fit_p,
                                                                config.fit_q);
                    rec.statistics[k][j] = r.statistic;
                    rec.p_values[k][j] = r.p_value;
                }
                continue;
            }
            const ScoreSpec& scores = score_specs[k];
            if (fit.theta_hat.order.n_params() == 0) {
                // Nothing to estimate: the rank statistic at the data itself.
                const RankResiduals rr = rank_residuals(series, fit.theta_hat, scores, grid);
                const Matrix k_zero = Matrix::Zero(scores.d * scores.d, scores.d * scores.d);
                for (std::size_t j = 0; j < n_m; ++j) {
                    const auto r = rank_stat_from_scores(rr.j1, rr.j2, fit.theta_hat, k_zero, scores,
                                                         config.m_values[j]);
                    rec.statistics[k][j] = r.statistic;
                    rec.p_values[k][j] = r.p_value;
                }
                continue;
            }
            const RankResiduals base = rank_residuals(series, fit.theta_hat, scores, grid);
            const KMatrix k_bar = estimate_K(series, fit.theta_hat, scores, grid, &base);
            REstimateOptions opts;
            opts.discretize = config.discretize;
            const REstimate est = r_estimate_one_step(series, fit.theta_hat, scores, grid, k_bar, opts,
                                                      config.discretize ? nullptr : &base);
            const KMatrix k_test = config.recompute_k_at_estimate
                                       ? estimate_K(series, est.theta_tilde, scores, grid, &est.at_estimate)
                                       : k_bar;
            for (std::size_t j = 0; j < n_m; ++j) {
                const auto r = rank_stat(est, scores, config.m_values[j], k_test);
                rec.statistics[k][j] = r.statistic;
                rec.p_values[k][j] = r.p_value;
            }
        } catch (const std::exception& e) {
            rec.errors[k] = e.what();
            std::fill(rec.statistics[k].begin(), rec.statistics[k].end(), kNaN);
            std::fill(rec.p_values[k].begin(), rec.p_values[k].end(), kNaN);
        }
    }
    return rec;
}

McResult run_experiment(const McConfig& config, const VarmaSpec& dgp, const std::string& name) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();

    const Grid grid = make_grid(config.n, dgp.d, config.n_R, config.grid_seed);
    std::vector<ScoreSpec> score_specs;
    for (const auto& method : config.methods) {
        if (!method.scores) {
            score_specs.emplace_back();
            continue;
        }
        const ScoreSpec named = ScoreSpec::named(*method.scores, dgp.d);
        score_specs.push_back(config.grid_moments ? with_grid_moments(named, grid) : named);
    }
    std::vector<InnovationSampler> samplers;
    for (const auto& dens : config.densities) samplers.push_back(sampler_for(dens, config));

    const int n_dens = static_cast<int>(config.densities.size());
    const int total = n_dens * config.replications;
    std::vector<ReplicationRecord> slots(static_cast<std::size_t>(total));
    std::atomic<int> next{0};
    std::atomic<bool> aborted{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (int task = next++; task < total && !aborted; task = next++) {
            const int k = task / config.replications;
            const int rep = task % config.replications;
            try {
                slots[static_cast<std::size_t>(task)] =
                    run_replication(config, dgp, samplers[static_cast<std::size_t>(k)], grid, score_specs,
                                    config.densities[static_cast<std::size_t>(k)], k, rep);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                aborted = true;
            }
        }
    };
    const int width = std::max(1, std::min(config.threads > 0 ? config.threads : default_threads(), std::max(total, 1)));
    if (width == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(width));
        for (int w = 0; w < width; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    McResult result;
    result.experiment = name;
    result.config = config;
    result.log = std::move(slots);
    result.threads_used = width;
    result.rows = recount_rates(result);

    for (int k = 0; k < n_dens; ++k) {
        for (std::size_t j = 0; j < config.methods.size(); ++j) {
            int failed = 0;
            for (int rep = 0; rep < config.replications; ++rep) {
                if (!result.log[static_cast<std::size_t>(k * config.replications + rep)].errors[j].empty()) ++failed;
            }
            result.failures += failed;
            result.max_failure_rate =
                std::max(result.max_failure_rate, static_cast<double>(failed) / config.replications);
        }
    }
    result.experiment_error = result.max_failure_rate > 0.05;
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

std::uint64_t replication_seed(std::uint64_t master, int density_index, int rep) {
    const std::uint64_t a = splitmix64(master);
    const std::uint64_t b = splitmix64(a ^ static_cast<std::uint64_t>(density_index + 1));
    return splitmix64(b + static_cast<std::uint64_t>(rep));
}

McResult run_size_experiment(const McConfig& config) {
    return run_experiment(config, config.null_spec, "size");
}

McResult run_power_experiment(const McConfig& config) {
    return run_experiment(config, config.alt_spec, "power");
}

std::vector<RateRow> recount_rates(const McResult& result) {
    const McConfig& c = result.config;
    std::vector<RateRow> rows;
    for (std::size_t k = 0; k < c.densities.size(); ++k) {
        for (std::size_t j = 0; j < c.methods.size(); ++j) {
            for (std::size_t mi = 0; mi < c.m_values.size(); ++mi) {
                int ok = 0;
                int rejected = 0;
                for (const auto& rec : result.log) {
                    if (rec.density != c.densities[k]) continue;
                    const double pv = rec.p_values[j][mi];
                    if (std::isnan(pv)) continue;
                    ++ok;
                    if (pv < c.alpha) ++rejected;
                }
                RateRow row;
                row.density = c.densities[k];
                row.method = c.methods[j].method_name();
                row.scores = c.methods[j].scores_name();
                row.m = c.m_values[mi];
                row.N = ok;
                row.rate = ok > 0 ? static_cast<double>(rejected) / ok : kNaN;
                row.se = ok > 0 ? std::sqrt(row.rate * (1.0 - row.rate) / ok) : kNaN;
                rows.push_back(row);
            }
        }
    }
    return rows;
}

void write_rates_csv(std::ostream& os, const std::vector<RateRow>& rows) {
    os << "density,method,scores,m,rate,se,N\n";
    for (const auto& r : rows) {
        os << r.density << ',' << r.method << ',' << r.scores << ',' << r.m << ',' << detail::format_double(r.rate)
           << ',' << detail::format_double(r.se) << ',' << r.N << '\n';
    }
}

std::vector<RateRow> parse_rates_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "density,method,scores,m,rate,se,N") {
        throw std::runtime_error("parse_rates_csv: missing or unexpected header");
    }
    std::vector<RateRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 7) throw std::runtime_error("parse_rates_csv: expected 7 fields in '" + line + "'");
        RateRow r;
        r.density = f[0];
        r.method = f[1];
        r.scores = f[2];
        r.m = std::stoi(f[3]);
        r.rate = std::strtod(f[4].c_str(), nullptr);
        r.se = std::strtod(f[5].c_str(), nullptr);
        r.N = std::stoi(f[6]);
        rows.push_back(r);
    }
    return rows;
}

void emit_results(const McResult& result, const std::string& prefix) {
    {
        std::ofstream csv(prefix + ".csv", std::ios::binary);
        if (!csv) throw std::runtime_error("emit_results: cannot open " + prefix + ".csv");
        write_rates_csv(csv, result.rows);
        if (!csv) throw std::runtime_error("emit_results: write failed for " + prefix + ".csv");
    }
    std::ofstream js(prefix + ".json", std::ios::binary);
    if (!js) throw std::runtime_error("emit_results: cannot open " + prefix + ".json");
    js << mc_result_to_json(result) << '\n';
    if (!js) throw std::runtime_error("emit_results: write failed for " + prefix + ".json");
}

}  // namespace varmarank
