#include <vector>

#include "wavelab/pipeline.hpp"

int main(int argc, char** argv) {
    return wavelab::cli_main(std::vector<std::string>(argv + 1, argv + argc));
}
