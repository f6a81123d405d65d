#include <iostream>

#include "polyselect/cli.hpp"

int main(int argc, char** argv) { return polyselect::run_cli(argc, argv, std::cout, std::cerr); }
