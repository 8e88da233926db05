#include "hipseg/cli/app.hpp"

int main(int argc, char** argv) { return hipseg::cli::run_cli(argc, argv); }
