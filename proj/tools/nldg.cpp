#include <iostream>

#include "nldg/cli.hpp"

int main(int argc, char** argv) { return nldg::parse_and_dispatch(argc, argv, std::cout, std::cerr); }
