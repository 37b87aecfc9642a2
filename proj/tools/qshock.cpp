#include <iostream>

#include "qshock/cli.hpp"

int main(int argc, char** argv) { return qshock::cli::run(argc, argv, std::cout, std::cerr); }
