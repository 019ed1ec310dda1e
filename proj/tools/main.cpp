#include <string>
#include <vector>

#include "bciflow/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return bciflow::cli::run(args);
}
