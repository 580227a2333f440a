#include <iostream>
#include <string>
#include <vector>

#include "stereostyle/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return stereostyle::run_cli(args, std::cout, std::cerr);
}
