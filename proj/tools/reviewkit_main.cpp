#include "reviewkit/cli.hpp"

int main(int argc, char** argv) { return reviewkit::run(argc, argv); }
