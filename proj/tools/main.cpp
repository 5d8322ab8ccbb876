#include "biforms/workbench.hpp"

int main(int argc, char** argv) { return biforms::cli_main(argc, argv); }
