#include <iostream>

#include "permadde/cli.hpp"

int main(int argc, char** argv) { return permadde::run_cli(argc, argv, std::cout, std::cerr); }
