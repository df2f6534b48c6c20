#include "querc/cli.hpp"

int main(int argc, char** argv) { return querc::cli::run(argc, argv); }
