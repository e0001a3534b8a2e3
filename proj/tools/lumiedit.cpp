#include "lumiedit/cli.hpp"

int main(int argc, char** argv) { return lumiedit::cli::run(argc, argv); }
