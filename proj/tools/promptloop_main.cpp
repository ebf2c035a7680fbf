#include <iostream>

#include "promptloop/cli/app.hpp"

int main(int argc, char** argv) { return promptloop::cli::run(argc, argv, std::cout, std::cerr); }
