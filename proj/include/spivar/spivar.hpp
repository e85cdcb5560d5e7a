#pragma once

// Umbrella header: APARCH volatility fitting with standardized Pearson IV
// innovations, VaR backtesting, and report I/O.

#include "spivar/aparch.hpp"
#include "spivar/cli.hpp"
#include "spivar/data_io.hpp"
#include "spivar/diagnostics.hpp"
#include "spivar/errors.hpp"
#include "spivar/risk.hpp"
#include "spivar/special_functions.hpp"
#include "spivar/spiv.hpp"
