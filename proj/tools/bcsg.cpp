#include "bcsg/cli.hpp"

int main(int argc, char** argv) { return bcsg::cli::run(argc, argv, std::cout, std::cerr); }
