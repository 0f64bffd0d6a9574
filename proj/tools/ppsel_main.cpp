#include <iostream>

#include "ppsel/cli.hpp"

int main(int argc, char** argv) { return ppsel::run_cli(argc, argv, std::cout, std::cerr); }
