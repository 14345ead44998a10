#include <iostream>

#include "nqm/cli.hpp"

int main(int argc, char** argv) { return nqm::run_cli(argc, argv, std::cout, std::cerr); }
