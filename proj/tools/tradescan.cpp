#include <iostream>

#include "tradescan/cli.hpp"

int main(int argc, char** argv) {
  return tradescan::cli::dispatch(argc, argv, std::cout, std::cerr);
}
