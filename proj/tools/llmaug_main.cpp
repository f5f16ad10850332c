#include <iostream>
#include <string>
#include <vector>

#include "llmaug/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return llmaug::run_cli(args, std::cin, std::cout, std::cerr);
}
