#include "henfd/cli.hpp"

int main(int argc, char** argv) { return henfd::run_cli(argc, argv); }
