#include "rcbo/cli.hpp"

int main(int argc, char** argv)
{
    return rcbo::cli::main(argc, argv);
}
