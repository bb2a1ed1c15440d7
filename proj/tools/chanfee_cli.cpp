#include <iostream>
#include <string>
#include <vector>

#include "chanfee/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return chanfee::run_command(args, std::cout, std::cerr);
}
