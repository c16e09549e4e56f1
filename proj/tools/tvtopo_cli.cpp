#include <iostream>

#include "tvtopo/cli.hpp"

int main(int argc, char** argv) { return tvtopo::run_cli(argc, argv, std::cout, std::cerr); }
