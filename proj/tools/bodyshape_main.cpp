#include <iostream>

#include "bodyshape/cli.hpp"

int main(int argc, char** argv) { return bodyshape::run_cli(argc, argv, std::cout, std::cerr); }
