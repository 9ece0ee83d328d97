#include <string>
#include <vector>

#include "sepgan/harness.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return sepgan::dispatch(args);
}
