#include <cstdio>

// Placeholder entry point; subcommands are wired up once the library lands.
int main() {
    std::puts("usage: gapbench <calibrate|train|eval|ablate|report> [options]");
    return 0;
}
