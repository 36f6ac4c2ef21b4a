// Prints the critical radius of Werner states across the steering threshold
// and checks the Jevtic ansatz on a grid against the closed form.

#include <cstdio>

#include "steer/steer.hpp"

int main() {
  for (double p : {0.3, 0.45, 0.5, 0.55, 0.8}) {
    const auto r = steer::critical_radius(steer::werner_state(p));
    std::printf("p = %.2f  R = %.6f  %s\n", p, r.value, std::string(steer::to_string(r.verdict)).c_str());
  }

  const steer::Vec3 t(-0.9, -0.8, -0.7);
  const steer::EprMap map = steer::epr_map(steer::tstate(t));
  const auto form = steer::canonicalize_tstate(map);
  const auto grid = steer::principal_radius(steer::jevtic_measure(form, 4096), map);
  const auto exact = steer::tstate_critical_radius(form);
  std::printf("T = diag(-0.9, -0.8, -0.7): grid r = %.6f, closed form R = %.6f\n", grid.value,
              exact.value);
  return 0;
}
