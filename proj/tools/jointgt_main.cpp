#include <iostream>

#include "jointgt/cli.hpp"

int main(int argc, char** argv) { return jointgt::cli::run(argc, argv, std::cout, std::cerr); }
