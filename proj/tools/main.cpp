#include <iostream>

#include "shortstop/cli.hpp"

int main(int argc, char** argv) {
    return shortstop::run_cli(argc, argv, std::cout, std::cerr);
}
