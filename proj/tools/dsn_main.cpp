#include <iostream>

#include "dsn/cli/dispatch.hpp"

int main(int argc, char** argv) { return dsn::cli::dispatch(argc, argv, std::cout, std::cerr); }
