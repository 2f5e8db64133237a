#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "rootopt_cli/cli.hpp"

int main(int argc, char** argv) {
  try {
    return rootopt::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "rootopt: " << e.what() << '\n';
    return 1;
  }
}
