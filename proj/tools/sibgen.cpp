#include <iostream>

#include "sibgen/cli.hpp"

int main(int argc, char** argv) { return sibgen::cli_dispatch(argc, argv, std::cout, std::cerr); }
