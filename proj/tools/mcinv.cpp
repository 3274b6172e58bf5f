#include <iostream>
#include <string>
#include <vector>

#include "mcinv/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mcinv::runCli(args, std::cout, std::cerr);
}
