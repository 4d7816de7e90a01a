#include <iostream>

#include "therasim/service/cli.hpp"

int main(int argc, char** argv) { return therasim::run_cli(argc, argv, std::cout, std::cerr); }
