#include "ddm/cli.hpp"

int main(int argc, char **argv) { return ddm::cli::main(argc, argv); }
