#include "selgen/cli.hpp"

int main(int argc, char** argv) { return selgen::dispatch(argc, argv); }
