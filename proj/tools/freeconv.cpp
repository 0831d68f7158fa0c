#include <iostream>

#include "freeconv/cli.hpp"

int main(int argc, char** argv) { return freeconv::run_cli(argc, argv, std::cout, std::cerr); }
