#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace desync {

enum class ActivationKind { ReLU = 0, Sigmoid = 1, Tanh = 2 };

inline constexpr std::array<ActivationKind, 3> kAllActivations{
    ActivationKind::ReLU, ActivationKind::Sigmoid, ActivationKind::Tanh};

/// Canonical lower-case name ("relu", "sigmoid", "tanh").
std::string_view to_string(ActivationKind kind) noexcept;

/// Case-insensitive lookup; nullopt for names outside the core set.
std::optional<ActivationKind> parse_activation(std::string_view name) noexcept;

/// Evaluates the activation in double precision. Exponent arguments are clamped
/// to +-500, which is invisible at 1e-12 since both curves saturate far earlier.
/// Throws DomainError for NaN or infinite input.
double evaluate(ActivationKind kind, double x);

}  // namespace desync
