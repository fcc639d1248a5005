#include "nmfalpha/cli.hpp"

int main(int argc, char** argv) { return nmfa::cli::cli_main(argc, argv); }
