#include "scomp/cli.hpp"

int main(int argc, char** argv) { return scomp::cli_main(argc, argv); }
