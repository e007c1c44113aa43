#include <iostream>

#include "ipla/cli.hpp"

int main(int argc, char** argv) { return ipla::run_cli(argc, argv, std::cout, std::cerr); }
