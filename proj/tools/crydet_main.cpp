#include "crydet/cli.hpp"

int main(int argc, char** argv) { return crydet::cli::run(argc, argv); }
