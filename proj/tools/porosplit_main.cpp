#include <iostream>

#include "porosplit/cli.hpp"

int main(int argc, char** argv) { return porosplit::cli::main(argc, argv, std::cout, std::cerr); }
