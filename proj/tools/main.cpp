#include <iostream>

#include "noisychannel/cli.hpp"

int main(int argc, char** argv) { return noisychannel::run_cli(argc, argv, std::cout, std::cerr); }
