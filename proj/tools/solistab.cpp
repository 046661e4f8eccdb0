#include <string>
#include <vector>

#include "solistab/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return solistab::run_cli(args);
}
