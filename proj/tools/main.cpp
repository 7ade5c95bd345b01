#include "fmea/cli.hpp"

int main(int argc, char** argv) { return fmea::dispatch(argc, argv); }
