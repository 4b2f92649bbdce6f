#include <vector>

#include "tempofuse/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return tempofuse::cli_dispatch(args);
}
