#include <string>
#include <vector>

#include "cyclefix/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return cyclefix::cli::main_entry(args);
}
