#include <iostream>

#include "silm/cli.hpp"

int main(int argc, char** argv) { return silm::cli::main(argc, argv, std::cout, std::cerr); }
