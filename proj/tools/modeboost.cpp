#include "modeboost/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return modeboost::dispatch({argv + 1, argv + argc}, std::cout, std::cerr);
}
