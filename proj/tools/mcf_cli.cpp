#include "mcf/cli.hpp"

int main(int argc, char** argv) { return mcf::run_command(argc, argv); }
