#include <iostream>
#include <string>
#include <vector>

#include "latentface/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return latentface::run_cli(args, std::cout, std::cerr);
}
