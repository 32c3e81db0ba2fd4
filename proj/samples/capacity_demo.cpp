// Computes the systole of a few bodies and prints the spectrum found below
// the cutoff, together with the CZ index of each orbit.
#include <cmath>
#include <cstdio>

#include <systola/systola.hpp>

int main() {
  using namespace systola;
  const ConvexBody bodies[] = {
      make_ellipsoid({1.0, std::sqrt(2.0)}),
      make_ellipsoid({1.2, 1.7}),
      make_perturbed_ellipsoid({1.0, std::sqrt(2.0)}, 0.05, {0.3, 0.2, 0.3, 0.1}, 0.3),
  };
  for (const auto& body : bodies) {
    const SystoleResult r = systole(body);
    std::printf("%s: systole %.9f (shooting %.9f), N = %d\n", body.name.c_str(), r.action,
                r.oracle_action.value_or(NAN), r.order);
    for (const auto& e : r.spectrum)
      std::printf("  action %.9f  Morse index %d  CZ %s\n", e.action, e.morse_index,
                  e.cz ? std::to_string(*e.cz).c_str() : "-");
  }
}
