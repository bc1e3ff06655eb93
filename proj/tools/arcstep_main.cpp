#include "arcstep/cli.hpp"

int main(int argc, char** argv) { return arcstep::run_cli(argc, argv); }
