#include "varmarank/io.hpp"

#include "format.hpp"
#include "varmarank/montecarlo.hpp"

#include <json.hpp>

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace varmarank {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

Matrix matrix_from_json(const json& j, int d, const std::string& what) {
    if (!j.is_array() || static_cast<int>(j.size()) != d) {
        throw std::invalid_argument(what + ": expected " + std::to_string(d) + " rows");
    }
    Matrix m(d, d);
    for (int r = 0; r < d; ++r) {
        const json& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<int>(row.size()) != d) {
            throw std::invalid_argument(what + ": row " + std::to_string(r + 1) + " must have " + std::to_string(d) +
                                        " entries");
        }
        for (int c = 0; c < d; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

json spec_to_json(const VarmaSpec& spec) {
    json j;
    j["d"] = spec.d;
    j["p"] = spec.p();
    j["q"] = spec.q();
    j["A"] = json::array();
    for (const auto& a : spec.ar) j["A"].push_back(matrix_to_json(a));
    j["B"] = json::array();
    for (const auto& b : spec.ma) j["B"].push_back(matrix_to_json(b));
    return j;
}

VarmaSpec spec_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("VarmaSpec JSON must be an object");
    VarmaSpec spec;
    spec.d = j.at("d").get<int>();
    if (spec.d < 1) throw std::invalid_argument("VarmaSpec JSON: d must be positive");
    const int p = j.value("p", -1);
    const int q = j.value("q", -1);
    const json a = j.value("A", json::array());
    const json b = j.value("B", json::array());
    for (std::size_t i = 0; i < a.size(); ++i) spec.ar.push_back(matrix_from_json(a[i], spec.d, "A_" + std::to_string(i + 1)));
    for (std::size_t i = 0; i < b.size(); ++i) spec.ma.push_back(matrix_from_json(b[i], spec.d, "B_" + std::to_string(i + 1)));
    if (p >= 0 && p != spec.p()) throw std::invalid_argument("VarmaSpec JSON: p does not match the number of A matrices");
    if (q >= 0 && q != spec.q()) throw std::invalid_argument("VarmaSpec JSON: q does not match the number of B matrices");
    return spec;
}

json method_to_json(const MethodSpec& m) { return m.method == TestMethod::gaussian ? "gaussian" : m.scores_name(); }

json config_to_json(const McConfig& c) {
    json j;
    j["null_spec"] = spec_to_json(c.null_spec);
    j["alt_spec"] = spec_to_json(c.alt_spec);
    j["fit_p"] = c.fit_p;
    j["fit_q"] = c.fit_q;
    j["n"] = c.n;
    j["replications"] = c.replications;
    j["burn_in"] = c.burn_in;
    j["m_values"] = c.m_values;
    j["densities"] = c.densities;
    j["methods"] = json::array();
    for (const auto& m : c.methods) j["methods"].push_back(method_to_json(m));
    j["n_R"] = c.n_R ? json(*c.n_R) : json(nullptr);
    j["grid_seed"] = c.grid_seed;
    j["alpha"] = c.alpha;
    j["master_seed"] = c.master_seed;
    j["threads"] = c.threads;
    j["mixture_sigma2"] = c.mixture_sigma2 == MixtureSigma2::lower_negated ? "lower_negated" : "upper_read";
    j["recompute_k_at_estimate"] = c.recompute_k_at_estimate;
    j["discretize"] = c.discretize ? json(*c.discretize) : json(nullptr);
    j["grid_moments"] = c.grid_moments;
    return j;
}

}  // namespace

VarmaSpec varma_spec_from_json(const std::string& text) {
    try {
        return spec_from_json(json::parse(text));
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("VarmaSpec JSON: ") + e.what());
    }
}

std::string varma_spec_to_json(const VarmaSpec& spec) {
    check_structure(spec);
    return spec_to_json(spec).dump(2);
}

VarmaSpec read_varma_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return varma_spec_from_json(ss.str());
}

SeriesData read_series_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("series CSV: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header;
    {
        std::stringstream hs(line);
        std::string f;
        while (std::getline(hs, f, ',')) header.push_back(f);
    }
    if (header.size() < 2 || header[0] != "t") throw std::invalid_argument("series CSV: header must be t,x1,...,xd");
    const int d = static_cast<int>(header.size()) - 1;
    for (int k = 1; k <= d; ++k) {
        if (header[static_cast<std::size_t>(k)] != "x" + std::to_string(k)) {
            throw std::invalid_argument("series CSV: header must be t,x1,...,xd");
        }
    }
    std::vector<std::vector<double>> rows;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string f;
        std::vector<double> row;
        while (std::getline(ls, f, ',')) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(f, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != f.size() || f.empty()) {
                throw std::invalid_argument("series CSV: bad number '" + f + "' on line " + std::to_string(lineno));
            }
            row.push_back(v);
        }
        if (static_cast<int>(row.size()) != d + 1) {
            throw std::invalid_argument("series CSV: wrong field count on line " + std::to_string(lineno));
        }
        rows.push_back(std::move(row));
    }
    SeriesData s;
    s.values.resize(static_cast<Eigen::Index>(rows.size()), d);
    for (std::size_t t = 0; t < rows.size(); ++t) {
        for (int k = 0; k < d; ++k) s.values(static_cast<Eigen::Index>(t), k) = rows[t][static_cast<std::size_t>(k + 1)];
    }
    if (!s.values.allFinite()) throw std::invalid_argument("series CSV: non-finite value");
    return s;
}

SeriesData read_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_series_csv(in);
}

void write_series_csv(std::ostream& os, const SeriesData& series) {
    os << "t";
    for (Eigen::Index k = 1; k <= series.dim(); ++k) os << ",x" << k;
    os << '\n';
    for (Eigen::Index t = 0; t < series.n(); ++t) {
        os << (t + 1);
        for (Eigen::Index k = 0; k < series.dim(); ++k) os << ',' << detail::format_double(series.values(t, k));
        os << '\n';
    }
}

std::string fit_to_json(const ThetaVector& theta, const Matrix& sigma, const std::string& method,
                        const std::string& scores, int iterations, bool converged, double gradient_norm,
                        double condition_number) {
    json j = spec_to_json(theta.to_spec());
    json fit;
    fit["method"] = method;
    fit["scores"] = scores;
    fit["iterations"] = iterations;
    fit["converged"] = converged;
    fit["gradient_norm"] = gradient_norm;
    fit["condition_number"] = condition_number;
    fit["sigma"] = matrix_to_json(sigma);
    j["fit"] = fit;
    return j.dump(2);
}

std::string test_report_to_json(const TestReport& r) {
    json j;
    j["method"] = to_string(r.method);
    j["scores"] = r.scores ? to_string(*r.scores) : "none";
    j["m"] = r.m;
    j["df"] = r.df;
    j["statistic"] = r.statistic;
    j["p_value"] = r.p_value;
    j["per_lag"] = r.per_lag;
    j["mp_rank"] = r.mp_rank;
    j["warnings"] = r.warnings;
    return j.dump(2);
}

std::string test_report_csv_header() { return "method,scores,m,df,stat,pvalue"; }

std::string test_report_csv_row(const TestReport& r) {
    std::ostringstream os;
    os << to_string(r.method) << ',' << (r.scores ? to_string(*r.scores) : "none") << ',' << r.m << ',' << r.df << ','
       << detail::format_double(r.statistic) << ',' << detail::format_double(r.p_value);
    return os.str();
}

McConfig mc_config_from_json(const std::string& text, const McConfig& defaults) {
    McConfig c = defaults;
    try {
        const json j = json::parse(text);
        if (!j.is_object()) throw std::invalid_argument("McConfig JSON must be an object");
        if (j.contains("null_spec")) c.null_spec = spec_from_json(j["null_spec"]);
        if (j.contains("alt_spec")) c.alt_spec = spec_from_json(j["alt_spec"]);
        c.fit_p = j.value("fit_p", c.fit_p);
        c.fit_q = j.value("fit_q", c.fit_q);
        c.n = j.value("n", c.n);
        c.replications = j.value("replications", c.replications);
        c.burn_in = j.value("burn_in", c.burn_in);
        if (j.contains("m_values")) c.m_values = j["m_values"].get<std::vector<int>>();
        if (j.contains("densities")) c.densities = j["densities"].get<std::vector<std::string>>();
        if (j.contains("methods")) {
            c.methods.clear();
            for (const auto& m : j["methods"]) c.methods.push_back(method_from_string(m.get<std::string>()));
        }
        if (j.contains("n_R")) c.n_R = j["n_R"].is_null() ? std::nullopt : std::optional<int>(j["n_R"].get<int>());
        c.grid_seed = j.value("grid_seed", c.grid_seed);
        c.alpha = j.value("alpha", c.alpha);
        c.master_seed = j.value("master_seed", c.master_seed);
        c.threads = j.value("threads", c.threads);
        if (j.contains("mixture_sigma2")) {
            const auto v = j["mixture_sigma2"].get<std::string>();
            if (v == "lower_negated") {
                c.mixture_sigma2 = MixtureSigma2::lower_negated;
            } else if (v == "upper_read") {
                c.mixture_sigma2 = MixtureSigma2::upper_read;
            } else {
                throw std::invalid_argument("McConfig JSON: mixture_sigma2 must be lower_negated or upper_read");
            }
        }
        c.recompute_k_at_estimate = j.value("recompute_k_at_estimate", c.recompute_k_at_estimate);
        c.grid_moments = j.value("grid_moments", c.grid_moments);
        if (j.contains("discretize")) {
            c.discretize = j["discretize"].is_null() ? std::nullopt
                                                     : std::optional<double>(j["discretize"].get<double>());
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("McConfig JSON: ") + e.what());
    }
    return c;
}

std::string mc_config_to_json(const McConfig& config) { return config_to_json(config).dump(2); }

std::string mc_result_to_json(const McResult& result) {
    json j;
    j["experiment"] = result.experiment;
    j["config"] = config_to_json(result.config);
    j["wall_seconds"] = result.wall_seconds;
    j["threads_used"] = result.threads_used;
    j["failures"] = result.failures;
    j["max_failure_rate"] = result.max_failure_rate;
    j["experiment_error"] = result.experiment_error;
    j["rates"] = json::array();
    for (const auto& r : result.rows) {
        j["rates"].push_back({{"density", r.density}, {"method", r.method}, {"scores", r.scores}, {"m", r.m},
                              {"rate", r.rate}, {"se", r.se}, {"N", r.N}});
    }
    j["log"] = json::array();
    for (const auto& rec : result.log) {
        json e;
        e["density"] = rec.density;
        e["rep"] = rec.rep;
        e["seed"] = rec.seed;
        e["statistics"] = rec.statistics;
        e["p_values"] = rec.p_values;
        e["errors"] = rec.errors;
        j["log"].push_back(e);
    }
    return j.dump(1);
}

}  // namespace varmarank
