#include "gelkit_cli/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return gelkit::cli::run(argc, argv, std::cout, std::cerr); }
