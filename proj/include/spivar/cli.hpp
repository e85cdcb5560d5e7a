#pragma once

// Command-line front end: wires ingestion, fitting, diagnostics, and
// backtesting into reproducible runs that emit a single JSON report plus
// aligned text tables and plot-ready CSVs.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "spivar/aparch.hpp"
#include "spivar/data_io.hpp"
#include "spivar/diagnostics.hpp"
#include "spivar/errors.hpp"
#include "spivar/risk.hpp"
#include "spivar/spiv.hpp"

namespace spivar {

// Six long-side tail probabilities and their short-side mirrors.
inline std::vector<double> default_quantiles() {
    return {0.05, 0.025, 0.01,  0.005, 0.0025, 0.001,
            0.95, 0.975, 0.99,  0.995, 0.9975, 0.999};
}

struct RunConfig {
    std::string command;      // stats | fit | backtest | simulate | full
    std::string input;        // price CSV (all commands except simulate)
    std::string output;       // report path; plot CSVs are derived from it
    std::string params_file;  // flat key=value APARCH parameters
    std::vector<double> quantiles = default_quantiles();
    int dq_lags = 5;
    double opportunity_cost = 0.0;
    std::uint64_t seed = 1;
    int max_iterations = 5000;
    double tol = 1e-8;
    int multi_start = 1;
    std::size_t sim_n = 6650;       // simulate: number of returns
    std::size_t sim_burn_in = 1000; // simulate: discarded warm-up draws
    bool quiet = false;             // suppress stdout tables
};

inline std::vector<double> parse_level_list(const std::string& csv) {
    std::vector<double> levels;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = detail::trim(tok);
        if (tok.empty()) continue;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("unparseable quantile level '" + tok + "'");
        }
        if (used != tok.size())
            throw std::invalid_argument("unparseable quantile level '" + tok + "'");
        if (!(v > 0.0 && v < 1.0))
            throw std::invalid_argument("quantile level " + tok + " outside (0, 1)");
        levels.push_back(v);
    }
    if (levels.empty()) throw std::invalid_argument("empty quantile list");
    return levels;
}

inline AparchParams load_params_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open parameter file '" + path + "'");
    AparchParams p;
    std::array<bool, AparchParams::kCount> seen{};
    const auto names = AparchParams::names();
    std::string line;
    std::size_t line_no = 0;
    auto arr = p.to_array();
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw IoError(path + ":" + std::to_string(line_no) + ": expected key=value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        int idx = -1;
        for (int i = 0; i < AparchParams::kCount; ++i)
            if (key == names[static_cast<std::size_t>(i)]) idx = i;
        if (idx < 0)
            throw IoError(path + ":" + std::to_string(line_no) + ": unknown parameter '" +
                          key + "'");
        if (seen[static_cast<std::size_t>(idx)])
            throw IoError(path + ":" + std::to_string(line_no) + ": duplicate parameter '" +
                          key + "'");
        std::size_t used = 0;
        try {
            arr[static_cast<std::size_t>(idx)] = std::stod(val, &used);
        } catch (const std::exception&) {
            used = std::string::npos;
        }
        if (used != val.size())
            throw IoError(path + ":" + std::to_string(line_no) + ": unparseable value '" +
                          val + "'");
        seen[static_cast<std::size_t>(idx)] = true;
    }
    for (int i = 0; i < AparchParams::kCount; ++i)
        if (!seen[static_cast<std::size_t>(i)])
            throw IoError(path + ": missing parameter '" +
                          std::string(names[static_cast<std::size_t>(i)]) + "'");
    p = AparchParams::from_array(arr);
    detail::validate_aparch_params(p);  // invalid values: domain error, not an I/O one
    return p;
}

inline void write_params_file(const std::string& path, const AparchParams& p) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    const auto arr = p.to_array();
    const auto names = AparchParams::names();
    char buf[40];
    for (std::size_t i = 0; i < arr.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", arr[i]);
        out << names[i] << " = " << buf << '\n';
    }
    if (!out) throw IoError("failed writing '" + path + "'");
}

namespace detail {

inline std::string path_stem(const std::string& path) {
    const std::size_t slash = path.find_last_of("/\\");
    const std::size_t dot = path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return path;
    return path.substr(0, dot);
}

inline std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

inline nlohmann::ordered_json config_json(const RunConfig& cfg) {
    nlohmann::ordered_json j;
    j["command"] = cfg.command;
    j["input"] = cfg.input;
    j["output"] = cfg.output;
    j["params_file"] = cfg.params_file;
    j["quantiles"] = cfg.quantiles;
    j["dq_lags"] = cfg.dq_lags;
    j["opportunity_cost"] = cfg.opportunity_cost;
    j["seed"] = cfg.seed;
    j["max_iterations"] = cfg.max_iterations;
    j["tol"] = cfg.tol;
    j["multi_start"] = cfg.multi_start;
    j["sim_n"] = cfg.sim_n;
    j["sim_burn_in"] = cfg.sim_burn_in;
    return j;
}

inline nlohmann::ordered_json params_json(const AparchParams& p) {
    nlohmann::ordered_json j;
    const auto names = AparchParams::names();
    const auto arr = p.to_array();
    for (std::size_t i = 0; i < arr.size(); ++i) j[names[i]] = arr[i];
    return j;
}

inline nlohmann::ordered_json named_array_json(
    const std::array<double, AparchParams::kCount>& a) {
    nlohmann::ordered_json j;
    const auto names = AparchParams::names();
    for (std::size_t i = 0; i < a.size(); ++i) j[names[i]] = a[i];
    return j;
}

inline nlohmann::ordered_json outcome_json(const TestOutcome& t) {
    nlohmann::ordered_json j;
    j["stat"] = t.stat;
    j["p_value"] = t.p_value;
    j["degenerate"] = t.degenerate;
    return j;
}

}  // namespace detail

// Orchestrates one run.  Returns the process exit code: 0 success, 1 domain
// error, 2 convergence failure, 3 I/O error.
inline int run(const RunConfig& cfg, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    try {
        if (cfg.command != "stats" && cfg.command != "fit" && cfg.command != "backtest" &&
            cfg.command != "simulate" && cfg.command != "full")
            throw std::invalid_argument("unknown command '" + cfg.command +
                                        "' (expected stats|fit|backtest|simulate|full)");
        if (cfg.dq_lags < 1) throw std::invalid_argument("--dq-lags must be >= 1");
        for (double q : cfg.quantiles)
            if (!(q > 0.0 && q < 1.0))
                throw std::invalid_argument("quantile levels must lie in (0, 1)");
        if (cfg.quantiles.empty()) throw std::invalid_argument("empty quantile list");

        if (cfg.command == "simulate") {
            if (cfg.params_file.empty())
                throw std::invalid_argument(
                    "simulate requires --params with the generating parameters");
            if (cfg.output.empty())
                throw std::invalid_argument("simulate requires --out for the CSV path");
            if (cfg.sim_n < 2) throw std::invalid_argument("--sim-n must be >= 2");
            const AparchParams p = load_params_file(cfg.params_file);
            const std::vector<double> r =
                aparch_simulate(p, cfg.sim_n, cfg.seed, cfg.sim_burn_in);
            std::vector<Date> dates;
            std::vector<double> prices;
            dates.reserve(r.size() + 1);
            prices.reserve(r.size() + 1);
            Date d{2000, 1, 3};
            double price = 100.0;
            dates.push_back(d);
            prices.push_back(price);
            for (double ret : r) {
                d = d.next_day();
                price *= std::exp(ret / 100.0);
                dates.push_back(d);
                prices.push_back(price);
            }
            write_prices_csv(cfg.output, dates, prices);
            if (!cfg.quiet)
                out << "wrote " << prices.size() << " prices (" << r.size()
                    << " returns) to " << cfg.output << "\n";
            return 0;
        }

        if (cfg.input.empty())
            throw std::invalid_argument(cfg.command + " requires --input <csv>");

        const PriceSeries ps = load_prices_csv(cfg.input);
        const ReturnSeries rs = to_returns(ps.dates, ps.prices, cfg.input);

        nlohmann::ordered_json doc;
        doc["schema_version"] = "spivar-report-1";
        doc["config"] = detail::config_json(cfg);
        {
            nlohmann::ordered_json in;
            in["path"] = cfg.input;
            in["fingerprint"] = file_fingerprint(cfg.input);
            in["rows_kept"] = ps.prices.size();
            in["rows_dropped"] = ps.dropped_rows;
            in["n_returns"] = rs.returns.size();
            in["first_date"] = rs.dates.front().to_string();
            in["last_date"] = rs.dates.back().to_string();
            doc["input"] = in;
        }

        const bool want_stats = cfg.command == "stats" || cfg.command == "full";
        const bool want_fit = cfg.command == "fit" || cfg.command == "full";
        const bool want_backtest = cfg.command == "backtest" || cfg.command == "full";

        if (want_stats) {
            const SummaryStats st = summary_stats(rs.returns, 12);
            nlohmann::ordered_json j;
            j["n"] = st.n;
            j["min"] = st.min;
            j["max"] = st.max;
            j["range"] = st.range;
            j["mean"] = st.mean;
            j["std_dev"] = st.std_dev;
            j["skewness"] = st.skewness;
            j["kurtosis"] = st.kurtosis;
            j["jarque_bera"] = st.jarque_bera;
            j["jarque_bera_p"] = st.jarque_bera_p;
            j["ljung_box_returns"] = st.lb_returns;
            j["ljung_box_returns_p"] = st.lb_returns_p;
            j["ljung_box_squared"] = st.lb_squared;
            j["ljung_box_squared_p"] = st.lb_squared_p;
            j["arch_lm"] = st.arch_lm;
            j["arch_lm_p"] = st.arch_lm_p;
            j["lags"] = st.lags;
            doc["summary"] = j;

            const AcfPacf ap = acf_pacf(rs.returns, 12);
            std::vector<double> abs_r(rs.returns.size()), sq_r(rs.returns.size());
            for (std::size_t i = 0; i < rs.returns.size(); ++i) {
                abs_r[i] = std::abs(rs.returns[i]);
                sq_r[i] = rs.returns[i] * rs.returns[i];
            }
            const AcfPacf ap_abs = acf_pacf(abs_r, 12);
            const AcfPacf ap_sq = acf_pacf(sq_r, 12);
            nlohmann::ordered_json c;
            std::vector<int> lag_idx;
            for (int k = 1; k <= 12; ++k) lag_idx.push_back(k);
            c["lags"] = lag_idx;
            c["acf_returns"] = ap.acf;
            c["pacf_returns"] = ap.pacf;
            c["acf_abs_returns"] = ap_abs.acf;
            c["acf_squared_returns"] = ap_sq.acf;
            doc["correlograms"] = c;

            if (!cfg.quiet) {
                out << "== summary statistics ==\n";
                auto line = [&](const char* k, double v, double p = -1.0) {
                    char buf[96];
                    if (p >= 0.0)
                        std::snprintf(buf, sizeof(buf), "%-22s %14.6f   (p = %.6f)\n", k, v, p);
                    else
                        std::snprintf(buf, sizeof(buf), "%-22s %14.6f\n", k, v);
                    out << buf;
                };
                out << "observations           " << st.n << "\n";
                line("min", st.min);
                line("max", st.max);
                line("range", st.range);
                line("mean", st.mean);
                line("std_dev", st.std_dev);
                line("skewness", st.skewness);
                line("kurtosis", st.kurtosis);
                line("jarque_bera", st.jarque_bera, st.jarque_bera_p);
                line("ljung_box_returns", st.lb_returns, st.lb_returns_p);
                line("ljung_box_squared", st.lb_squared, st.lb_squared_p);
                line("arch_lm", st.arch_lm, st.arch_lm_p);
            }
        }

        AparchParams model_params;
        bool have_params = false;
        const FitResult* fit_ptr = nullptr;
        FitResult fit_result;

        if (want_fit) {
            FitOptions opts;
            opts.max_iterations = cfg.max_iterations;
            opts.tol = cfg.tol;
            opts.multi_start = cfg.multi_start;
            opts.seed = cfg.seed;
            fit_result = aparch_fit(rs.returns, opts);
            fit_ptr = &fit_result;
            model_params = fit_result.params;
            have_params = true;

            nlohmann::ordered_json j;
            j["params"] = detail::params_json(fit_result.params);
            j["robust_se"] = detail::named_array_json(fit_result.std_errors);
            j["t_stats"] = detail::named_array_json(fit_result.t_stats);
            j["p_values"] = detail::named_array_json(fit_result.p_values);
            j["loglik"] = fit_result.loglik;
            j["persistence"] = fit_result.persistence;
            j["converged"] = fit_result.converged;
            j["iterations"] = fit_result.iterations;
            j["hessian_condition"] = fit_result.hessian_condition;
            j["se_valid"] = fit_result.se_valid;
            doc["fit"] = j;

            std::vector<double> eps_sq(rs.returns.size()), h(rs.returns.size());
            for (std::size_t i = 0; i < rs.returns.size(); ++i) {
                const double e = rs.returns[i] - fit_result.params.mu;
                eps_sq[i] = e * e;
                h[i] = fit_result.state.sigma[i] * fit_result.state.sigma[i];
            }
            const LossReport lr = loss_functions(eps_sq, h);
            nlohmann::ordered_json lj;
            lj["mse"] = lr.mse;
            lj["mad"] = lr.mad;
            lj["medae"] = lr.medae;
            lj["medape"] = lr.medape;
            lj["hmse"] = lr.hmse;
            lj["hmae"] = lr.hmae;
            lj["log_sq"] = lr.log_sq;
            lj["gmle"] = lr.gmle;
            lj["medape_excluded"] = lr.medape_excluded;
            lj["log_excluded"] = lr.log_excluded;
            doc["losses"] = lj;

            if (!cfg.quiet) {
                out << "== model fit ==\n";
                char buf[256];
                std::snprintf(buf, sizeof(buf), "%-8s %14s %12s %10s %10s\n", "param",
                              "estimate", "robust_se", "t", "p");
                out << buf;
                const auto names = AparchParams::names();
                const auto arr = fit_result.params.to_array();
                for (std::size_t i = 0; i < arr.size(); ++i) {
                    std::snprintf(buf, sizeof(buf), "%-8s %14.6f %12.6f %10.4f %10.4f\n",
                                  names[i], arr[i], fit_result.std_errors[i],
                                  fit_result.t_stats[i], fit_result.p_values[i]);
                    out << buf;
                }
                std::snprintf(buf, sizeof(buf),
                              "loglik %.4f   persistence %.6f   converged %s   iterations %d\n",
                              fit_result.loglik, fit_result.persistence,
                              fit_result.converged ? "yes" : "no", fit_result.iterations);
                out << buf;
                std::snprintf(buf, sizeof(buf),
                              "losses: mse %.6g  mad %.6g  medae %.6g  medape %.6g  hmse %.6g  "
                              "hmae %.6g  log_sq %.6g  gmle %.6g\n",
                              lr.mse, lr.mad, lr.medae, lr.medape, lr.hmse, lr.hmae, lr.log_sq,
                              lr.gmle);
                out << buf;
            }

            if (!cfg.output.empty())
                write_params_file(detail::path_stem(cfg.output) + "_params.txt",
                                  fit_result.params);
        }

        if (want_backtest && !have_params) {
            if (cfg.params_file.empty())
                throw std::invalid_argument(
                    "backtest needs parameters: pass --params <file> (key=value lines for "
                    "mu, omega, alpha, beta, gamma, delta, nu, m) or use the full command "
                    "to fit first");
            model_params = load_params_file(cfg.params_file);
            have_params = true;
        }

        std::vector<BacktestRow> rows;
        if (want_backtest) {
            const FilterState state =
                fit_ptr ? fit_ptr->state : aparch_filter(model_params, rs.returns);
            const SpivDist dist(model_params.m, model_params.nu);
            doc["backtest_params"] = detail::params_json(model_params);
            nlohmann::ordered_json bt = nlohmann::ordered_json::array();
            nlohmann::ordered_json tails = nlohmann::ordered_json::array();
            for (double level : cfg.quantiles) {
                const BacktestRow row =
                    backtest_level(rs.returns, model_params.mu, state.sigma, dist, level,
                                   cfg.dq_lags, cfg.opportunity_cost);
                rows.push_back(row);
                nlohmann::ordered_json j;
                j["level"] = row.level;
                j["side"] = row.side == PositionSide::Long ? "long" : "short";
                j["observations"] = row.observations;
                j["violations"] = row.violations;
                j["coverage_ratio"] = row.coverage_ratio;
                j["kupiec"] = detail::outcome_json(row.kupiec);
                j["independence"] = detail::outcome_json(row.independence);
                j["conditional_coverage"] = detail::outcome_json(row.coverage);
                {
                    nlohmann::ordered_json dq;
                    dq["stat"] = row.dq.stat;
                    dq["p_value"] = row.dq.p_value;
                    dq["dof"] = row.dq.dof;
                    dq["degenerate"] = row.dq.degenerate;
                    j["dq"] = dq;
                }
                j["lopez"] = row.lopez;
                j["sarma_regulatory"] = row.sarma.regulatory;
                j["sarma_firm"] = row.sarma.firm;
                bt.push_back(j);

                nlohmann::ordered_json t;
                t["level"] = row.level;
                t["side"] = row.side == PositionSide::Long ? "long" : "short";
                t["violations"] = row.tail.violations;
                t["violation_ratio"] = row.tail.violation_ratio;
                t["lambda"] = row.tail.lambda;
                t["dist_quantile"] = row.tail.dist_quantile;
                t["mean_var"] = row.tail.mean_var;
                t["empirical_quantile"] = row.tail.empirical_quantile;
                t["var_ref"] = row.tail.var_ref;
                t["tce1"] = row.tail.tce1;
                t["tce2"] = row.tail.tce2;
                t["es"] = row.tail.es;
                t["degenerate"] = row.tail.degenerate;
                tails.push_back(t);
            }
            doc["backtest"] = bt;
            doc["tails"] = tails;

            if (!cfg.quiet) {
                char buf[240];
                out << "== VaR backtests ==\n";
                std::snprintf(buf, sizeof(buf),
                              "%8s %5s %6s %9s %9s %9s %9s %9s %12s %12s %12s\n", "level",
                              "side", "viol", "ratio", "kupiec_p", "indep_p", "cc_p", "dq_p",
                              "lopez", "sarma_reg", "sarma_firm");
                out << buf;
                for (const BacktestRow& row : rows) {
                    std::snprintf(buf, sizeof(buf),
                                  "%8.4f %5s %6zu %9.6f %9.6f %9.6f %9.6f %9.6f %12.4f "
                                  "%12.4f %12.4f\n",
                                  row.level, row.side == PositionSide::Long ? "long" : "short",
                                  row.violations, row.coverage_ratio, row.kupiec.p_value,
                                  row.independence.p_value, row.coverage.p_value,
                                  row.dq.p_value, row.lopez, row.sarma.regulatory,
                                  row.sarma.firm);
                    out << buf;
                }
                out << "== tail measures ==\n";
                std::snprintf(buf, sizeof(buf), "%8s %12s %12s %12s %10s %10s %10s %10s\n",
                              "level", "dist_q", "mean_var", "emp_q", "tce1", "tce2",
                              "lambda", "es");
                out << buf;
                for (const BacktestRow& row : rows) {
                    std::snprintf(buf, sizeof(buf),
                                  "%8.4f %12.4f %12.4f %12.4f %10.4f %10.4f %10.4f %10.4f\n",
                                  row.level, row.tail.dist_quantile, row.tail.mean_var,
                                  row.tail.empirical_quantile, row.tail.tce1, row.tail.tce2,
                                  row.tail.lambda, row.tail.es);
                    out << buf;
                }
            }
        }

        if (!cfg.output.empty()) {
            write_report(doc, cfg.output);
            const std::string stem = detail::path_stem(cfg.output);
            if (want_stats) {
                std::ofstream acsv(stem + "_acf.csv", std::ios::binary);
                if (!acsv) throw IoError("cannot write '" + stem + "_acf.csv'");
                acsv << "lag,acf_returns,pacf_returns,acf_abs_returns,acf_squared_returns\n";
                const auto& c = doc["correlograms"];
                char buf[200];
                for (std::size_t k = 0; k < 12; ++k) {
                    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g\n", k + 1,
                                  c["acf_returns"][k].get<double>(),
                                  c["pacf_returns"][k].get<double>(),
                                  c["acf_abs_returns"][k].get<double>(),
                                  c["acf_squared_returns"][k].get<double>());
                    acsv << buf;
                }
            }
            if (want_backtest) {
                std::ofstream vcsv(stem + "_var.csv", std::ios::binary);
                if (!vcsv) throw IoError("cannot write '" + stem + "_var.csv'");
                vcsv << "date,return";
                for (const BacktestRow& row : rows)
                    vcsv << ",var_" << detail::fmt("%g", row.level);
                vcsv << "\n";
                char buf[64];
                for (std::size_t t = 0; t < rs.returns.size(); ++t) {
                    vcsv << rs.dates[t].to_string();
                    std::snprintf(buf, sizeof(buf), ",%.17g", rs.returns[t]);
                    vcsv << buf;
                    for (const BacktestRow& row : rows) {
                        std::snprintf(buf, sizeof(buf), ",%.17g", row.var.var[t]);
                        vcsv << buf;
                    }
                    vcsv << "\n";
                }
            }
            if (!cfg.quiet) out << "report written to " << cfg.output << "\n";
        }

        if (fit_ptr && !fit_ptr->converged) {
            err << "warning: optimizer did not converge within the iteration budget\n";
            return 2;
        }
        return 0;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const ConvergenceError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::domain_error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace spivar
