#pragma once

#include "rco/linalg.hpp"

#include <variant>

namespace rco {

/// Violation threshold shared by all separators.
inline constexpr double kSeparationTol = 1e-6;

struct Feasible {};

/// Valid inequality a^T x <= b violated by the queried point.
struct Violated {
  Vector a;
  double b = 0.0;
  double violation = 0.0;
};

using SeparationResult = std::variant<Feasible, Violated>;

inline bool is_feasible(const SeparationResult& r) { return std::holds_alternative<Feasible>(r); }

/// Decides x in P or returns an inequality valid for P that x violates.
/// Implementations are stateless after construction.
class SeparationOracle {
 public:
  virtual ~SeparationOracle() = default;
  [[nodiscard]] virtual SeparationResult separate(const Vector& x) const = 0;
};

/// Accepts every point.
class AcceptAllOracle final : public SeparationOracle {
 public:
  [[nodiscard]] SeparationResult separate(const Vector&) const override { return Feasible{}; }
};

}  // namespace rco
