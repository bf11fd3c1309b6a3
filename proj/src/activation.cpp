#include "desync/activation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "desync/error.hpp"

namespace desync {

namespace {

constexpr double kExpClamp = 500.0;

double clamped_exp(double v) { return std::exp(std::clamp(v, -kExpClamp, kExpClamp)); }

}  // namespace

std::string_view to_string(ActivationKind kind) noexcept {
  switch (kind) {
    case ActivationKind::ReLU: return "relu";
    case ActivationKind::Sigmoid: return "sigmoid";
    case ActivationKind::Tanh: return "tanh";
  }
  return "unknown";
}

std::optional<ActivationKind> parse_activation(std::string_view name) noexcept {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (auto kind : kAllActivations)
    if (lower == to_string(kind)) return kind;
  return std::nullopt;
}

double evaluate(ActivationKind kind, double x) {
  if (!std::isfinite(x)) throw DomainError("activation input must be finite");
  switch (kind) {
    case ActivationKind::ReLU:
      return x > 0.0 ? x : 0.0;
    case ActivationKind::Sigmoid:
      return 1.0 / (1.0 + clamped_exp(-x));
    case ActivationKind::Tanh: {
      const double ep = clamped_exp(x);
      const double en = clamped_exp(-x);
      return (ep - en) / (ep + en);
    }
  }
  throw DomainError("unknown activation kind");
}

}  // namespace desync
