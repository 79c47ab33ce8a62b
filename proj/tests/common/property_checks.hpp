#pragma once

#include <string>
#include <vector>

namespace kpp::props {

struct PropertyResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// p(t, -y) = -p(t, y) and p > 0 for y > 0, random H1/H2 data.
PropertyResult odd_positive(unsigned long seed = 2024, int samples = 400);
/// p <= y^{k+1} for -1 <= k <= 0, p >= y^{k+1} for k >= 0, on a (t, y) lattice.
PropertyResult heat_sandwich();
/// Ordered initial data stay ordered (up to 1e-8) at every output time.
PropertyResult comparison_ordering();
/// lab -> frame -> lab is the identity to rel 1e-12 (linear storage) for every frame kind.
PropertyResult frame_round_trip();
/// Halving dx shrinks the change in X_{1/2}(t_end) by about 4 (1% slack).
PropertyResult grid_convergence();

std::vector<PropertyResult> all_properties();

}  // namespace kpp::props
