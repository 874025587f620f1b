#ifndef VOLWINDOW_CLI_HPP
#define VOLWINDOW_CLI_HPP

#include <iostream>
#include <string>
#include <vector>

namespace volwindow::cli {

// Dispatches one subcommand (args excludes the program name, e.g.
// {"plan", "--shape", "4,4,4"}). Data goes to `out` as a single JSON line;
// diagnostics to stderr. Returns 0 on success, 1 on validation/usage errors,
// 2 on I/O errors.
int run_subcommand(const std::vector<std::string>& args, std::ostream& out = std::cout);

} // namespace volwindow::cli

#endif
