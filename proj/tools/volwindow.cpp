#include <string>
#include <vector>

#include "volwindow/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return volwindow::cli::run_subcommand(args);
}
