#include <iostream>

#include "app.hpp"

int main(int argc, char** argv) { return ains::app::run_cli(argc, argv, std::cout, std::cerr); }
