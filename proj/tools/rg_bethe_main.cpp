#include <cstdio>

int main() {
  std::fprintf(stderr, "rg_bethe: not yet implemented\n");
  return 2;
}
