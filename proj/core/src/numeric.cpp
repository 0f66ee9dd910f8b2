#include "bitshift/numeric.hpp"

namespace bitshift {

double entropy_nats(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (double w : weights) h += neg_x_log_x(w / total);
  return h;
}

}  // namespace bitshift
