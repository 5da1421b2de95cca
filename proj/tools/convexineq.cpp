#include "convexineq/cli.hpp"

int main(int argc, char** argv) { return convexineq::cli::run(argc, argv); }
