#include "cli.hpp"

int main(int argc, char** argv) { return fairimb::cli::run(argc, argv); }
