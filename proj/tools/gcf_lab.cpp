#include "cli_commands.hpp"

int main(int argc, char** argv) { return gcf_cli::run(argc, argv); }
