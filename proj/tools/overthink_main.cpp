#include <string>
#include <vector>

#include "overthink/cli.hpp"

int main(int argc, char** argv) {
  return overthink::cli::run(std::vector<std::string>(argv, argv + argc));
}
