#include "factorlens/cli.hpp"

int main(int argc, char** argv) { return factorlens::cli::run_cli(argc, argv); }
