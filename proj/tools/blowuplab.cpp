#include "blowuplab/cli.hpp"

int main(int argc, char** argv) { return blowuplab::io::dispatch(argc, argv); }
