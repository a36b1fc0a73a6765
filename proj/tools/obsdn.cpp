#include "obsdn/cli.hpp"

int main(int argc, char** argv) { return obsdn::cli::run(argc, argv); }
