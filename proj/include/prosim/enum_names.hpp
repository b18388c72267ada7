#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

#include "prosim/error.hpp"

namespace prosim {

/// Specialize with `static constexpr std::array<std::string_view, N> names`
/// listing the wire name of each enumerator in declaration order.
template <class E>
struct EnumNames;

template <class E>
constexpr std::size_t enum_count() noexcept {
  return EnumNames<E>::names.size();
}

template <class E>
constexpr std::size_t enum_index(E value) noexcept {
  return static_cast<std::size_t>(value);
}

template <class E>
constexpr std::string_view enum_name(E value) noexcept {
  return EnumNames<E>::names[enum_index(value)];
}

template <class E>
constexpr E enum_at(std::size_t index) noexcept {
  return static_cast<E>(index);
}

/// Looks up a wire name; throws DataError naming `what` when unknown.
template <class E>
E parse_enum(std::string_view text, std::string_view what) {
  const auto& names = EnumNames<E>::names;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == text) return static_cast<E>(i);
  }
  fail(ErrorKind::DataError, "unknown " + std::string(what) + " '" + std::string(text) + "'");
}

template <class E>
constexpr auto all_enum_values() noexcept {
  std::array<E, enum_count<E>()> out{};
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<E>(i);
  return out;
}

}  // namespace prosim
