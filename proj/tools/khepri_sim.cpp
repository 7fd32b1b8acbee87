#include <iostream>

#include "khepri/cli.hpp"

int main(int argc, char** argv) { return khepri::run_cli(argc, argv, std::cout, std::cerr); }
