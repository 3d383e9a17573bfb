#include "idense/cli.hpp"

int main(int argc, char** argv) { return idense::cli::run({argv, argv + argc}); }
