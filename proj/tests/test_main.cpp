#include <gtest/gtest.h>

#include "fiilab/blas_guard.hpp"

int main(int argc, char** argv) {
  fiilab::ensure_sane_blas(argv);
  ::testing::InitGoogleTest(&argc, argv);
  return RUN_ALL_TESTS();
}
