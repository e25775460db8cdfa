#include "siv/cli.hpp"

int main(int argc, char** argv) { return siv::run_cli(argc, argv); }
