#include <cstdio>

int main() {
  std::puts("torl: cli not wired yet");
  return 0;
}
