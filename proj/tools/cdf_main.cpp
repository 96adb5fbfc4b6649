#include "cdf/cli.hpp"

int main(int argc, char** argv) { return cdf::run_cli(argc, argv); }
