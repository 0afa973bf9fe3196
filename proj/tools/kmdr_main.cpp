#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return kmdr::cli::dispatch(argc, argv, std::cout, std::cerr); }
