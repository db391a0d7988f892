#include <iostream>

#include "noisyuat/cli.hpp"

int main(int argc, char** argv) {
  return noisyuat::run_cli(argc, argv, std::cout, std::cerr);
}
