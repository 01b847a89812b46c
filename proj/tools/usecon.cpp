#include <iostream>
#include <string>
#include <vector>

#include "usecon/report.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return usecon::run_cli(args, std::cout, std::cerr);
}
