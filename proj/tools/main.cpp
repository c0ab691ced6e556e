#include <string>
#include <vector>

#include "dispersive/cli.hpp"

int main(int argc, char** argv) {
    return dispersive::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
