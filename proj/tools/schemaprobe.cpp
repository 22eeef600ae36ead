#include "schemaprobe/cli.hpp"

int main(int argc, char** argv) { return schemaprobe::cli::cli_main(argc, argv); }
