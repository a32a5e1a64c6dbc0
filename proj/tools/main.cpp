#include <iostream>

#include "oprisk/cli.hpp"

int main(int argc, char** argv) {
  return oprisk::cli::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
