#include "cli.hpp"

int main(int argc, char** argv) { return aeg::cli::run_cli(argc, argv); }
