#include "mdlcl/codelength.h"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "mdlcl/format.h"

namespace mdlcl {

Codelength::Codelength(double bits) : bits_(bits) {
  if (std::isnan(bits)) throw std::domain_error("codelength is NaN");
  if (std::isinf(bits)) {
    if (bits < 0) throw std::domain_error("codelength is -inf");
    infinite_ = true;
    bits_ = 0.0;
  }
}

Codelength Codelength::infinite() {
  Codelength c;
  c.infinite_ = true;
  return c;
}

Codelength Codelength::from_probability(double p) {
  if (std::isnan(p) || p < 0.0 || p > 1.0) throw std::domain_error("probability outside [0,1]");
  if (p == 0.0) return infinite();
  return Codelength(-std::log2(p));
}

Codelength Codelength::from_nats(double nats) { return Codelength(nats / std::numbers::ln2); }

double Codelength::bits() const { return infinite_ ? std::numeric_limits<double>::infinity() : bits_; }

double Codelength::finite_bits() const {
  if (infinite_) throw std::domain_error("infinite codelength has no finite value");
  return bits_;
}

Codelength& Codelength::operator+=(Codelength other) {
  if (other.infinite_) infinite_ = true;
  if (infinite_)
    bits_ = 0.0;
  else
    bits_ += other.bits_;
  return *this;
}

Codelength Codelength::operator/(double divisor) const {
  if (!(divisor > 0.0)) throw std::domain_error("codelength divisor must be positive");
  if (infinite_) return infinite();
  return Codelength(bits_ / divisor);
}

std::string Codelength::to_string() const {
  if (infinite_) return "inf";
  return shortest_decimal(bits_);
}

}  // namespace mdlcl
