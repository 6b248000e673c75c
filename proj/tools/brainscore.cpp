#include "brainscore/cli.hpp"

int main(int argc, char** argv) {
  return brainscore::run_cli(std::vector<std::string>(argv, argv + argc));
}
