#include "ctcs/cli.hpp"

int main(int argc, char** argv) { return ctcs::run_cli(argc, argv); }
