#include "cli/run.hpp"

int main(int argc, char** argv) { return spa::cli::main_entry(argc, argv); }
