#include "tsemd/cli.hpp"

int main(int argc, char** argv) { return tsemd::cli_main(argc, argv); }
