#include <iostream>
#include <string>
#include <vector>

#include "medreg/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return medreg::cli::run(args, std::cout, std::cerr);
}
