#include "cosso/cli.hpp"

int main(int argc, char **argv) { return cosso::run_cli(argc, argv); }
