#include "evfuse/cli.hpp"

int main(int argc, char** argv) { return evfuse::cli::run(argc, argv); }
