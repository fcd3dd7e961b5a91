#include "wtpgmr/cli.hpp"

int main(int argc, char** argv) { return wtpgmr::cli::run(argc, argv); }
