#include "varmarank/center_outward.hpp"
#include "varmarank/estimation.hpp"
#include "varmarank/innovations.hpp"
#include "varmarank/io.hpp"
#include "varmarank/montecarlo.hpp"
#include "varmarank/portmanteau.hpp"
#include "varmarank/varma.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace varmarank;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Writes text to path, or to stdout when path is empty or "-".
void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
}

MixtureSigma2 parse_sigma2(const std::string& s) {
    if (s == "lower_negated") return MixtureSigma2::lower_negated;
    if (s == "upper_read") return MixtureSigma2::upper_read;
    throw std::invalid_argument("--mixture-sigma2 must be lower_negated or upper_read");
}

InnovationSampler sampler(const std::string& density, int d, MixtureSigma2 variant) {
    if (density == "mixture") return InnovationSampler::three_gaussian_mixture(variant);
    return make_named_sampler(density, d);
}

struct GridOptions {
    std::optional<int> n_R;
    std::uint64_t seed = 7;
};

struct RankFit {
    QmleFit qmle;
    Grid grid;
    ScoreSpec scores;
    REstimate estimate;
    KMatrix K_test;
};

RankFit rank_fit(const SeriesData& x, int p, int q, ScoreKind kind, const GridOptions& g, bool grid_moments,
                 std::optional<double> discretize) {
    RankFit f;
    f.qmle = qmle(x, p, q);
    if (!f.qmle.converged) throw std::runtime_error("QMLE did not converge: " + f.qmle.message);
    f.grid = make_grid(static_cast<int>(x.n()), static_cast<int>(x.dim()), g.n_R, g.seed);
    const ScoreSpec named = ScoreSpec::named(kind, static_cast<int>(x.dim()));
    f.scores = grid_moments ? with_grid_moments(named, f.grid) : named;
    const RankResiduals base = rank_residuals(x, f.qmle.theta_hat, f.scores, f.grid);
    if (f.qmle.theta_hat.order.n_params() == 0) {
        f.estimate = r_estimate_one_step(x, f.qmle.theta_hat, f.scores, f.grid, KMatrix{}, {}, &base);
        return f;
    }
    const KMatrix K = estimate_K(x, f.qmle.theta_hat, f.scores, f.grid, &base);
    if (K.high_variance) std::cerr << "warning: " << K.warning << '\n';
    REstimateOptions opts;
    opts.discretize = discretize;
    f.estimate = r_estimate_one_step(x, f.qmle.theta_hat, f.scores, f.grid, K, opts, discretize ? nullptr : &base);
    f.K_test = estimate_K(x, f.estimate.theta_tilde, f.scores, f.grid, &f.estimate.at_estimate);
    return f;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        const int v = std::stoi(item, &used);
        if (used != item.size()) throw std::invalid_argument("bad integer list: " + text);
        out.push_back(v);
    }
    return out;
}

std::vector<std::string> parse_word_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian and center-outward rank-based portmanteau tests for VARMA models"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Simulate a VARMA series as CSV");
    std::string sim_spec, sim_reference = "null", sim_density = "normal", sim_out, sim_sigma2 = "lower_negated";
    int sim_n = 500, sim_burn = 200;
    std::uint64_t sim_seed = 1;
    sim->add_option("--spec", sim_spec, "VarmaSpec JSON file (overrides --reference)");
    sim->add_option("--reference", sim_reference, "Built-in model")->check(CLI::IsMember({"null", "alternative"}));
    sim->add_option("--n", sim_n, "Series length")->check(CLI::PositiveNumber);
    sim->add_option("--density", sim_density, "Innovation law")->check(CLI::IsMember({"normal", "mixture", "skewt"}));
    sim->add_option("--seed", sim_seed, "Random seed");
    sim->add_option("--burn-in", sim_burn, "Discarded warm-up length")->check(CLI::NonNegativeNumber);
    sim->add_option("--mixture-sigma2", sim_sigma2, "lower_negated or upper_read");
    sim->add_option("--out", sim_out, "Output CSV (stdout by default)");

    // fit
    auto* fit = app.add_subcommand("fit", "Fit a VARMA(p,q) model");
    std::string fit_data, fit_method = "qmle", fit_scores = "vdw", fit_out;
    int fit_p = 1, fit_q = 1;
    GridOptions fit_grid;
    std::optional<double> fit_discretize;
    bool fit_population = false;
    fit->add_option("--data", fit_data, "Series CSV (t,x1..xd)")->required();
    fit->add_option("--p", fit_p, "AR order")->check(CLI::NonNegativeNumber);
    fit->add_option("--q", fit_q, "MA order")->check(CLI::NonNegativeNumber);
    fit->add_option("--method", fit_method, "qmle or rank")->check(CLI::IsMember({"qmle", "rank"}));
    fit->add_option("--scores", fit_scores, "Score kind")->check(CLI::IsMember({"sign", "spearman", "vdw"}));
    fit->add_option("--n-R", fit_grid.n_R, "Grid radii (auto by default)");
    fit->add_option("--seed", fit_grid.seed, "Grid rotation seed");
    fit->add_option("--discretize", fit_discretize, "Round the preliminary estimate to a c/sqrt(n) lattice");
    fit->add_flag("--population-moments", fit_population, "Normalize with the limiting score moments");
    fit->add_option("--out", fit_out, "Output JSON (stdout by default)");

    // test
    auto* tst = app.add_subcommand("test", "Portmanteau test of a fitted VARMA(p,q) model");
    std::string tst_data, tst_method = "gaussian", tst_scores = "vdw", tst_m = "5,10,15,20,25", tst_format = "csv",
                          tst_out;
    int tst_p = 1, tst_q = 1;
    GridOptions tst_grid;
    bool tst_literal = false, tst_population = false;
    tst->add_option("--data", tst_data, "Series CSV (t,x1..xd)")->required();
    tst->add_option("--p", tst_p, "AR order")->check(CLI::NonNegativeNumber);
    tst->add_option("--q", tst_q, "MA order")->check(CLI::NonNegativeNumber);
    tst->add_option("--m", tst_m, "Comma-separated lag counts");
    tst->add_option("--method", tst_method, "gaussian or rank")->check(CLI::IsMember({"gaussian", "rank"}));
    tst->add_option("--scores", tst_scores, "Score kind")->check(CLI::IsMember({"sign", "spearman", "vdw"}));
    tst->add_option("--n-R", tst_grid.n_R, "Grid radii (auto by default)");
    tst->add_option("--seed", tst_grid.seed, "Grid rotation seed");
    tst->add_flag("--literal-normalization", tst_literal, "Gaussian statistic on -sigma^{-1} C_i");
    tst->add_flag("--population-moments", tst_population, "Normalize with the limiting score moments");
    tst->add_option("--format", tst_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    tst->add_option("--out", tst_out, "Output file (stdout by default)");

    // mc size | mc power
    auto* mc = app.add_subcommand("mc", "Monte Carlo rejection-rate experiments");
    mc->require_subcommand(1);
    std::string mc_config_path, mc_out = "mc", mc_sigma2, mc_m, mc_methods, mc_densities;
    bool mc_paper = false, mc_population = false;
    std::optional<int> mc_threads, mc_n, mc_reps, mc_n_R;
    std::optional<std::uint64_t> mc_seed;
    for (auto* sub : {mc->add_subcommand("size", "Rejection rates under the null model"),
                      mc->add_subcommand("power", "Rejection rates under the alternative model")}) {
        sub->add_option("--config", mc_config_path, "Experiment JSON; absent keys keep their defaults");
        sub->add_flag("--paper-scale", mc_paper, "N = 300, n = 1000 on a 25 x 40 grid");
        sub->add_option("--threads", mc_threads, "Parallel width (VARMARANK_THREADS by default)");
        sub->add_option("--n", mc_n, "Series length");
        sub->add_option("--replications", mc_reps, "Replications per density");
        sub->add_option("--m", mc_m, "Comma-separated lag counts");
        sub->add_option("--methods", mc_methods, "Comma-separated: gaussian, vdw, spearman, sign");
        sub->add_option("--densities", mc_densities, "Comma-separated: normal, mixture, skewt");
        sub->add_option("--n-R", mc_n_R, "Grid radii");
        sub->add_option("--seed", mc_seed, "Master seed");
        sub->add_option("--mixture-sigma2", mc_sigma2, "lower_negated or upper_read");
        sub->add_flag("--population-moments", mc_population, "Normalize with the limiting score moments");
        sub->add_option("--out", mc_out, "Output prefix for .csv and .json");
    }

    // grid-info
    auto* gi = app.add_subcommand("grid-info", "Grid factorization for a sample size");
    int gi_n = 1000, gi_d = 2;
    GridOptions gi_grid;
    std::string gi_points;
    gi->add_option("--n", gi_n, "Sample size")->check(CLI::PositiveNumber);
    gi->add_option("--d", gi_d, "Dimension")->check(CLI::PositiveNumber);
    gi->add_option("--n-R", gi_grid.n_R, "Grid radii (auto by default)");
    gi->add_option("--seed", gi_grid.seed, "Grid rotation seed");
    gi->add_option("--points", gi_points, "Write the grid points as CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) {
            const VarmaSpec spec = !sim_spec.empty()              ? read_varma_spec(sim_spec)
                                   : sim_reference == "alternative" ? reference_alternative_spec()
                                                                    : reference_null_spec();
            const Simulation s = simulate(spec, sim_n, sampler(sim_density, spec.d, parse_sigma2(sim_sigma2)),
                                          sim_seed, sim_burn);
            std::ostringstream os;
            write_series_csv(os, s.series);
            emit(sim_out, os.str());
            return 0;
        }

        if (*fit) {
            const SeriesData x = read_series_csv(fit_data);
            if (fit_method == "qmle") {
                const QmleFit f = qmle(x, fit_p, fit_q);
                emit(fit_out, fit_to_json(f.theta_hat, f.sigma_hat, "qmle", "none", f.iterations, f.converged,
                                          f.final_gradient_norm, 0.0));
                return f.converged ? 0 : 1;
            }
            const RankFit f = rank_fit(x, fit_p, fit_q, score_kind_from_string(fit_scores), fit_grid,
                                       !fit_population, fit_discretize);
            const Matrix sigma = residual_covariance(f.estimate.at_estimate.z);
            emit(fit_out, fit_to_json(f.estimate.theta_tilde, sigma, "rank", fit_scores, f.qmle.iterations, true,
                                      f.estimate.central_seq_at_estimate.size() ? f.estimate.central_seq_at_estimate.norm()
                                                                                : 0.0,
                                      f.estimate.condition_number));
            return 0;
        }

        if (*tst) {
            const SeriesData x = read_series_csv(tst_data);
            const std::vector<int> ms = parse_int_list(tst_m);
            std::vector<TestReport> reports;
            if (tst_method == "gaussian") {
                const QmleFit f = qmle(x, tst_p, tst_q);
                if (!f.converged) throw std::runtime_error("QMLE did not converge: " + f.message);
                GaussianOptions opts;
                opts.literal_normalization = tst_literal;
                for (int m : ms) reports.push_back(gaussian_stat(x, f, m, opts));
            } else {
                const RankFit f = rank_fit(x, tst_p, tst_q, score_kind_from_string(tst_scores), tst_grid,
                                           !tst_population, std::nullopt);
                for (int m : ms) {
                    if (f.qmle.theta_hat.order.n_params() == 0) {
                        const int d2 = static_cast<int>(x.dim() * x.dim());
                        reports.push_back(rank_stat_from_scores(f.estimate.at_estimate.j1, f.estimate.at_estimate.j2,
                                                                f.estimate.theta_tilde, Matrix::Zero(d2, d2), f.scores,
                                                                m));
                    } else {
                        reports.push_back(rank_stat(f.estimate, f.scores, m, f.K_test));
                    }
                }
            }
            std::string text;
            if (tst_format == "csv") {
                text = test_report_csv_header() + "\n";
                for (const auto& r : reports) text += test_report_csv_row(r) + "\n";
            } else {
                text = "[";
                for (std::size_t k = 0; k < reports.size(); ++k) text += (k ? ",\n" : "\n") + test_report_to_json(reports[k]);
                text += "\n]\n";
            }
            for (const auto& r : reports)
                for (const auto& w : r.warnings) std::cerr << "warning (m = " << r.m << "): " << w << '\n';
            emit(tst_out, text);
            return 0;
        }

        if (*mc) {
            const bool power = mc->got_subcommand("power");
            McConfig c = mc_paper ? McConfig::paper_scale() : McConfig{};
            if (!mc_config_path.empty()) c = mc_config_from_json(slurp(mc_config_path), c);
            if (mc_threads) c.threads = *mc_threads;
            if (mc_n) c.n = *mc_n;
            if (mc_reps) c.replications = *mc_reps;
            if (!mc_m.empty()) c.m_values = parse_int_list(mc_m);
            if (!mc_methods.empty()) {
                c.methods.clear();
                for (const auto& name : parse_word_list(mc_methods)) c.methods.push_back(method_from_string(name));
            }
            if (!mc_densities.empty()) c.densities = parse_word_list(mc_densities);
            if (mc_n_R) c.n_R = *mc_n_R;
            if (mc_seed) c.master_seed = *mc_seed;
            if (!mc_sigma2.empty()) c.mixture_sigma2 = parse_sigma2(mc_sigma2);
            if (mc_population) c.grid_moments = false;

            const McResult r = power ? run_power_experiment(c) : run_size_experiment(c);
            emit_results(r, mc_out);
            write_rates_csv(std::cout, r.rows);
            std::cerr << r.experiment << ": " << r.log.size() << " replications in " << r.wall_seconds << " s on "
                      << r.threads_used << " threads, " << r.failures << " failed method runs\n";
            if (r.experiment_error) {
                std::cerr << "error: failure rate " << r.max_failure_rate << " exceeds 5%\n";
                return 2;
            }
            return 0;
        }

        if (*gi) {
            const Grid g = make_grid(gi_n, gi_d, gi_grid.n_R, gi_grid.seed);
            std::cout << "n = " << g.n() << ", d = " << g.d << ": n_R = " << g.n_R << ", n_S = " << g.n_S
                      << ", n_0 = " << g.n_0 << (g.symmetric ? ", symmetric" : "") << "\nfeasible n_R:";
            for (int r : feasible_radii(gi_n, gi_d)) std::cout << ' ' << r;
            std::cout << '\n';
            if (!gi_points.empty()) {
                std::ostringstream os;
                write_grid_csv(os, g);
                emit(gi_points, os.str());
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
