#include <akalab/cli.hpp>

int main(int argc, char** argv) { return akalab::cli_main(argc, argv); }
