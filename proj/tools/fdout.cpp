#include "fdout/cli.hpp"

int main(int argc, char** argv) { return fdout::cli::run(argc, argv); }
