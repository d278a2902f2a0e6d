#include <iostream>

#include "summrec/cli/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return summrec::cli::run(args, std::cout, std::cerr);
}
