#include <iostream>
#include <string>
#include <vector>

#include "cmie/cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return cmie::cli::main(args, std::cout, std::cerr);
}
