#include <cstdio>

int main() {
    std::puts("cpclab: CLI under construction");
    return 0;
}
