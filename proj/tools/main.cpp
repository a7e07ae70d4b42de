// SPDX-License-Identifier: Apache-2.0
#include <cstdio>

int main() {
    std::fprintf(stderr, "vlod: command line interface not wired up yet\n");
    return 2;
}
