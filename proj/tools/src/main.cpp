#include <iostream>

#include "cbo/cli.hpp"

int main(int argc, char** argv) { return cbo::run_cli(argc, argv, std::cout, std::cerr); }
