#include "phaselin/cli.hpp"

int main(int argc, char** argv) { return phaselin::cli_entry(argc, argv); }
