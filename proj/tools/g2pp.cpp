#include <iostream>

#include "g2pp/cli.hpp"

int main(int argc, char** argv) { return g2pp::run_cli(argc, argv, std::cout, std::cerr); }
