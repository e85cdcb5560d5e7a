#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "spivar/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{
        "spivar: APARCH(1,1) volatility with standardized Pearson IV innovations —\n"
        "fitting, diagnostics, VaR backtesting, and expected-shortfall reporting"};

    spivar::RunConfig cfg;
    std::string quantiles_csv;

    app.add_option("--command", cfg.command,
                   "one of: stats | fit | backtest | simulate | full")
        ->required();
    app.add_option("--input", cfg.input, "price CSV with header 'date,price'");
    app.add_option("--out", cfg.output,
                   "report path (JSON); plot CSVs and fitted parameters are written "
                   "next to it; for simulate, the output CSV path");
    app.add_option("--params", cfg.params_file,
                   "key=value parameter file (mu, omega, alpha, beta, gamma, delta, nu, m)");
    app.add_option("--quantiles", quantiles_csv,
                   "comma-separated VaR levels in (0,1); below 0.5 = long side, above = "
                   "short side [default: the twelve standard levels]");
    app.add_option("--dq-lags", cfg.dq_lags, "lag count for the dynamic quantile test")
        ->capture_default_str();
    app.add_option("--opportunity-cost", cfg.opportunity_cost,
                   "capital cost rate in the firm loss function")
        ->capture_default_str();
    app.add_option("--seed", cfg.seed, "RNG seed for simulation and multi-start")
        ->capture_default_str();
    app.add_option("--max-iter", cfg.max_iterations, "optimizer iteration budget")
        ->capture_default_str();
    app.add_option("--tol", cfg.tol, "optimizer convergence tolerance")
        ->capture_default_str();
    app.add_option("--multi-start", cfg.multi_start,
                   "number of randomized optimizer starts")
        ->capture_default_str();
    app.add_option("--sim-n", cfg.sim_n, "simulate: number of returns")
        ->capture_default_str();
    app.add_option("--burn-in", cfg.sim_burn_in, "simulate: warm-up draws discarded")
        ->capture_default_str();
    app.add_flag("--quiet", cfg.quiet, "suppress stdout tables");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);  // prints usage/help to the right stream
        return rc == 0 ? 0 : 1;
    }

    if (!quantiles_csv.empty()) {
        try {
            cfg.quantiles = spivar::parse_level_list(quantiles_csv);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 1;
        }
    }

    return spivar::run(cfg);
}
