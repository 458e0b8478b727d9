#include <iostream>

#include "moebius/cli.hpp"

int main(int argc, char** argv) { return moebius::run_cli(argc, argv, std::cout, std::cerr); }
