#include <mads/cli.hpp>

int main(int argc, char** argv) { return mads::cli::run(argc, argv); }
