#include <iostream>

#include "toothseg/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return toothseg::run_cli(args, std::cout, std::cerr);
}
