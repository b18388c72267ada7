#include "prosim/cli.hpp"

int main(int argc, char** argv) { return prosim::cli::run_cli(argc, argv); }
