#include <iostream>

#include "dimperf/cli.hpp"

int main(int argc, char** argv) { return dimperf::run_cli(argc, argv, std::cout, std::cerr); }
