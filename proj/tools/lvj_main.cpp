#include "lvj/cli.hpp"

int main(int argc, char** argv) { return lvj::cli::run(argc, argv); }
