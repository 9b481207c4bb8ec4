#pragma once

#include <string>

namespace mdlcl {

/// An idealized codelength in bits, or the distinguished infinite value
/// produced by zero-probability events.
class Codelength {
 public:
  constexpr Codelength() = default;
  explicit Codelength(double bits);

  static Codelength infinite();
  /// -log2 p; p == 0 gives the infinite value.
  static Codelength from_probability(double p);
  static Codelength from_nats(double nats);

  bool is_infinite() const { return infinite_; }
  bool is_finite() const { return !infinite_; }
  /// Bits as a double; +inf for the infinite value.
  double bits() const;
  /// Throws std::domain_error for the infinite value.
  double finite_bits() const;

  Codelength& operator+=(Codelength other);
  Codelength operator+(Codelength other) const { return Codelength(*this) += other; }
  Codelength operator/(double divisor) const;

  /// "inf" or the shortest round-trip decimal.
  std::string to_string() const;

  bool operator==(const Codelength&) const = default;

 private:
  double bits_ = 0.0;
  bool infinite_ = false;
};

}  // namespace mdlcl
