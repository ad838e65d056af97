#include <iostream>

#include "evdiag/cli.hpp"

int main(int argc, char** argv) { return evdiag::cli::run_cli(argc, argv, std::cout, std::cerr); }
