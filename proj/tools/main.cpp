#include <iostream>
#include <vector>

#include "factorml/cli.hpp"

int main(int argc, char **argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return factorml::run_cli(args, std::cout, std::cerr);
}
