#include "cli/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return dpc::cli::run(argc, argv, std::cout, std::cerr); }
