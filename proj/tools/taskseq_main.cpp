#include <string>
#include <vector>

#include "taskseq/scenario.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return taskseq::run_command(args);
}
