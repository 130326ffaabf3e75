#include "dabench/cli.hpp"

int main(int argc, char** argv) { return dabench::cli::run(argc, argv); }
