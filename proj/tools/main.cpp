#include "cli.hpp"

int main(int argc, char** argv) { return simulpolicy::cli::run(argc, argv); }
