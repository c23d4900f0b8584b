#include <iostream>
#include <string>
#include <vector>

#include "mpn/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mpn::run_cli(args, std::cout, std::cerr);
}
