#pragma once

#include <ostream>

namespace ibrl::selfcheck {

// Built-in oracle suite, shared by `ibrl selfcheck` and the acceptance
// battery. Prints one line per check; returns true iff every check holds:
//   (a) closed-form Gaussian KL vs quadrature        <= 1e-6 (20 codes)
//   (b) finite-difference gradients, all 4 networks  <= 1e-4 relative
//   (c) variational bound >= exact discrete MI - 1e-6 (5 toy channels)
//   (d) cart-pole step vs clean-room integrator      <= 1e-10
//   (e) GAE recursion vs direct summation            <= 1e-12
bool run_selfcheck(std::ostream& os);

}  // namespace ibrl::selfcheck
