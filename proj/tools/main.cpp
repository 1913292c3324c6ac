#include <iostream>
#include <string>
#include <vector>

#include "singular_bound/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return sb::run_cli(args, std::cout, std::cerr);
}
