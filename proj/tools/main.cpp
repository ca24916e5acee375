#include <iostream>

#include "harness/commands.hpp"

int main(int argc, char** argv) { return harness::run_cli(argc, argv, std::cout, std::cerr); }
