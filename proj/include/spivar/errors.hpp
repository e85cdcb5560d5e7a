#pragma once

#include <stdexcept>
#include <string>

namespace spivar {

// Thrown when an iterative routine exhausts its budget without meeting
// its tolerance (optimizers, root finders, series summation, quadrature).
struct ConvergenceError : std::runtime_error {
    explicit ConvergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown on file/format problems (missing file, bad header, malformed row).
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace spivar
