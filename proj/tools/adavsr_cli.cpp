#include "adavsr/cli.hpp"

int main(int argc, char** argv) { return adavsr::run_cli(argc, argv); }
