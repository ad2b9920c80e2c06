#include "app.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return bragg_qnd::cli::run_cli(argc, argv, std::cout, std::cerr);
}
