#include <iostream>
#include <string>
#include <vector>

#include "papg/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return papg::cli_dispatch(args, std::cout, std::cerr, std::cin);
}
