#include <iostream>

#include "fc/cli.hpp"

int main(int argc, char** argv) { return fc::run_cli(argc, argv, std::cout, std::cerr); }
