#include <iostream>
#include <string>
#include <vector>

#include "conclab/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return conclab::cli::run_cli(args, std::cout, std::cerr);
}
