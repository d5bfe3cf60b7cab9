#pragma once

#include <complex>
#include <string>
#include <string_view>
#include <type_traits>

#include <Eigen/Dense>

#include "phaselin/errors.hpp"

namespace phaselin {

enum class ScalarField { kReal, kComplex };

inline std::string_view to_string(ScalarField field) {
  return field == ScalarField::kReal ? "real" : "complex";
}

inline ScalarField parse_field(std::string_view text) {
  if (text == "real") return ScalarField::kReal;
  if (text == "complex") return ScalarField::kComplex;
  throw Error(ErrorCode::kInvalidArgument, "unknown field '" + std::string(text) + "'");
}

using Complex = std::complex<double>;

template <typename T>
struct is_complex : std::false_type {};
template <typename T>
struct is_complex<std::complex<T>> : std::true_type {};

template <typename T>
inline constexpr bool is_complex_v = is_complex<T>::value;

/// The two scalar types every estimator is instantiated for.
template <typename T>
concept FieldScalar = std::is_same_v<T, double> || std::is_same_v<T, Complex>;

template <FieldScalar S>
inline constexpr ScalarField field_of = is_complex_v<S> ? ScalarField::kComplex : ScalarField::kReal;

template <FieldScalar S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <FieldScalar S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using RealMat = Mat<double>;
using RealVec = Vec<double>;

/// Runtime check used wherever objects of independently declared fields meet
/// (file loaders, the CLI). Compile-time code cannot mix fields at all.
inline void require_same_field(ScalarField a, ScalarField b, std::string_view what) {
  if (a != b) {
    throw Error(ErrorCode::kFieldMismatch, std::string(what) + ": " + std::string(to_string(a)) +
                                               " vs " + std::string(to_string(b)));
  }
}

}  // namespace phaselin
