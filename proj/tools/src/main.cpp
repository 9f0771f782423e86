#include <csignal>
#include <iostream>

#include "doaloc_cli/commands.hpp"

namespace {

void on_sigint(int) { doaloc::cli::interrupt_flag().store(true); }

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_sigint);
  return doaloc::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
