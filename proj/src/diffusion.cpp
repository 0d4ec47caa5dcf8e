#include "sibgen/diffusion/sampler.hpp"

#include <string>

namespace sibgen {

SolverOrder solver_order_from_name(std::string_view name) {
  if (name == "heun") return SolverOrder::Heun;
  if (name == "euler") return SolverOrder::Euler;
  throw std::invalid_argument("unknown solver order: " + std::string(name));
}

std::string_view solver_order_name(SolverOrder order) {
  return order == SolverOrder::Heun ? "heun" : "euler";
}

}  // namespace sibgen
