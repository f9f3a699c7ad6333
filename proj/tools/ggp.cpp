#include <iostream>

#include "ggp/cli.hpp"

int main(int argc, char** argv) { return ggp::run_cli(argc, argv, std::cout, std::cerr); }
