#include <string>
#include <vector>

#include "imdrive/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return imdrive::cli_main(args);
}
