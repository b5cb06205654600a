#include "vitrdd/cli.hpp"

int main(int argc, char** argv) { return vitrdd::dispatch(argc, argv); }
