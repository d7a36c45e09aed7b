#include <vector>

#include "privloc/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return privloc::run_cli(args);
}
