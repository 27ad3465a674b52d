#include "chamberwalk/cli.hpp"

int main(int argc, char** argv) { return chamberwalk::cli::main(argc, argv); }
