#include <iostream>

#include "foal/cli.hpp"

int main(int argc, char** argv) { return foal::cli::main(argc, argv, std::cout, std::cerr); }
