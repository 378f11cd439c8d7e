#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "runner.hpp"

int main(int argc, char** argv) {
    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        return spatsim::run(spatsim::parse_config(args));
    } catch (const std::exception& e) {
        std::fprintf(stderr, "spatsim: %s\n", e.what());
        return 1;
    }
}
