// CLI entry point; subcommands are filled in as the library grows.
#include <cstdio>

int main(int argc, char** argv) {
    (void)argc;
    (void)argv;
    std::puts("mgd: not wired up yet");
    return 0;
}
