#include "qtoc/cli.hpp"

int main(int argc, char** argv) { return qtoc::cli::run(argc, argv); }
