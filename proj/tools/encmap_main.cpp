#include "cli.hpp"

int main(int argc, char** argv) { return encmap::cli::run(argc, argv); }
