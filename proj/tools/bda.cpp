#include "bda/cli.hpp"

int main(int argc, char** argv) { return bda::cli::main(argc, argv); }
