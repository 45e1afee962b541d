#include <string>
#include <vector>

#include "dosebma/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return dosebma::cli::dispatch(args);
}
