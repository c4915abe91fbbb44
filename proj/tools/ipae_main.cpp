#include <iostream>

#include "ipae/cli.hpp"

int main(int argc, char** argv) { return ipae::cli::run(argc, argv, std::cout, std::cerr); }
