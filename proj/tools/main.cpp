#include "tvcflm/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return tvcflm::cli::run(argc, argv, std::cout, std::cerr); }
