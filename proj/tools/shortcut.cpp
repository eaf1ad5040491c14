#include <vector>

#include "shortcut/harness.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return shortcut::run_cli(args);
}
