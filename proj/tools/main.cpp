#include "gflow/cli.hpp"

int main(int argc, char** argv) { return gflow::cli_main(argc, argv); }
