#include <string>
#include <vector>

#include "oceanfc/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return oceanfc::run_cli(args);
}
