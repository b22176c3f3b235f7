#include "whitney/cli.hpp"

int main(int argc, char** argv)
{
    return whitney::cli::run_cli(argc, argv);
}
