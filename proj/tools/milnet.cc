#include <iostream>
#include <string>
#include <vector>

#include "milnet/cli.h"

int main(int argc, char **argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return milnet::run_cli(args, std::cout, std::cerr);
}
