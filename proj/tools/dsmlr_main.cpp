#include <iostream>

#include "dsmlr/cli.hpp"

int main(int argc, char** argv) { return dsmlr::cli::run(argc, argv, std::cout, std::cerr); }
