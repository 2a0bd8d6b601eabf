#pragma once

#include "wmsindy/common.hpp"
#include "wmsindy/field.hpp"
#include "wmsindy/library.hpp"
#include "wmsindy/testfn.hpp"

#include <optional>
#include <vector>

namespace wmsindy {

/// Discrete weak form of one state component: G ξ ≈ b, one row per query
/// point whose test-function support lies inside the record.
struct WeakComponent {
  Vector b;
  Matrix G;
  std::vector<int> centers;

  int rows() const { return static_cast<int>(b.size()); }
};

struct WeakSystem {
  std::vector<WeakComponent> components;
};

/// Rectangle-rule pairing of φ′ with the data (b) and of φ with Θ (G), at every
/// center c ∈ [m_d, N−1−m_d]. A known model's contribution is moved into b.
WeakSystem build_weak_system(const Matrix& states, const LibrarySpec& spec,
                             const std::vector<TestFunction>& testfns,
                             const std::optional<KnownModel>& known);

/// Σ_d ‖G_d ξ_d − b_d‖².
double weak_residual(const WeakSystem& system, const Matrix& coeffs);

/// Valid correlation out[h] = Σ_k taps[k]·signal[h+k], h = 0..len(signal)−len(taps).
Vector correlate_valid(const Vector& signal, const Vector& taps);

}  // namespace wmsindy
