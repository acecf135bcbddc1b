#include "grushin/cli.hpp"

int main(int argc, char** argv) { return grushin::cli_main(argc, argv); }
