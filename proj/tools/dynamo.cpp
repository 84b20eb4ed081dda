#include "dynamo/cli.hpp"

int main(int argc, char** argv) { return dynamo::cli::main(argc, argv); }
