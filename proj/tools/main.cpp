#include <iostream>

#include "grid_entropy/experiments.hpp"

int main(int argc, char** argv) { return grid_entropy::run_cli(argc, argv, std::cout, std::cerr); }
