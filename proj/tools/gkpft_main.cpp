#include "gkpft/cli_io.hpp"

int main(int argc, char** argv) { return gkpft::cli_main(argc, argv); }
