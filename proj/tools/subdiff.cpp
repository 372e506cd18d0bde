#include "subdiff/cli.hpp"

int main(int argc, char** argv) { return subdiff::cli::cli_main(argc, argv); }
