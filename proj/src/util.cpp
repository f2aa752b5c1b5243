#include "torl/util.hpp"

#include <cstdio>

namespace torl {

std::string format17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace torl
