#include <iostream>

#include "regionqa/commands.hpp"

int main(int argc, char** argv) { return regionqa::run_cli(argc, argv, std::cout, std::cerr); }
