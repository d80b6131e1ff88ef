#include <cstdio>

int main() {
  std::fprintf(stderr, "gumbelbox: command dispatch not wired up yet\n");
  return 2;
}
