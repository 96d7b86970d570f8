#include "bmb/cli.hpp"

int main(int argc, char** argv) { return bmb::cli_main(argc, argv); }
