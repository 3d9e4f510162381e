#include <csignal>
#include <iostream>
#include <string>
#include <vector>

#include "tgscrape/cli.hpp"

namespace {

extern "C" void on_sigint(int) { tgscrape::cli::request_interrupt(); }

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_sigint);
  std::vector<std::string> args(argv + 1, argv + argc);
  return tgscrape::cli::run(args, std::cout, std::cerr);
}
