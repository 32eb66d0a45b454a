#include <iostream>

#include "absorb/cli.hpp"

int main(int argc, char** argv) { return absorb::run_cli(argc, argv, std::cout, std::cerr); }
