#include <iostream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "roomsense/cli/commands.hpp"

int main(int argc, char** argv) {
  // stdout carries command output; logs go to stderr
  spdlog::set_default_logger(spdlog::stderr_color_mt("roomsense"));
  return roomsense::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
