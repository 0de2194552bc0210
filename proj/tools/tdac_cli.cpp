#include "tdac/cli.hpp"

int main(int argc, char** argv) { return tdac::cli_dispatch(argc, argv); }
