#ifndef VOLWINDOW_ERRORS_HPP
#define VOLWINDOW_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace volwindow {

// Error taxonomy used across the pipeline. The CLI maps io_error to exit
// code 2 and everything else to exit code 1.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct io_error : error {
    using error::error;
};

// Malformed or unsupported file content (bad magic, datatype, ...).
struct format_error : error {
    using error::error;
};

// Grid/tensor dimension mismatches, divisibility violations.
struct shape_error : error {
    using error::error;
};

struct argument_error : error {
    using error::error;
};

// Degenerate affines and other geometric impossibilities.
struct geometry_error : error {
    using error::error;
};

// A pluggable component (e.g. a patch predictor) broke its contract.
struct contract_error : error {
    using error::error;
};

} // namespace volwindow

#endif
