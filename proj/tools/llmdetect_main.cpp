#include <iostream>

#include "llmdetect/cli.hpp"

int main(int argc, char** argv) { return llmdetect::run_cli(argc, argv, std::cout, std::cerr); }
