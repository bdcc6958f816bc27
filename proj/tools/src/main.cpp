#include <iostream>
#include <string>
#include <vector>

#include "trafprof_cli/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return trafprof::cli::run(args, std::cout, std::cerr);
}
