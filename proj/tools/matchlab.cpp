#include <string>
#include <vector>

#include "matchlab/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return matchlab::run_cli(args);
}
