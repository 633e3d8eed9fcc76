#include <iostream>
#include <string>
#include <vector>

#include "octo/cli/commands.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return octo::cli::run_cli(args, std::cout, std::cerr);
}
