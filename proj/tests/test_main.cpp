#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>
#include <malloc.h>

int main(int argc, char** argv) {
  mallopt(M_MMAP_THRESHOLD, 32 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
  doctest::Context context(argc, argv);
  return context.run();
}
