#include <iostream>
#include <string>
#include <vector>

#include "capit/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return capit::cli::run(args, std::cout, std::cerr);
}
