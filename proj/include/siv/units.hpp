#pragma once

// Compile-time dimensional analysis for the photophysics chain. A Quantity
// stores a plain SI value; the exponents of (kg, m, s, A, K) live in the type,
// so a dimensionally wrong expression fails to compile.

#include <cmath>
#include <type_traits>

namespace siv::units {

template <int Mass, int Length, int Time, int Current, int Temperature>
struct Dim {
    static constexpr int kg = Mass;
    static constexpr int m = Length;
    static constexpr int s = Time;
    static constexpr int A = Current;
    static constexpr int K = Temperature;
};

template <typename D1, typename D2>
using DimProduct = Dim<D1::kg + D2::kg, D1::m + D2::m, D1::s + D2::s, D1::A + D2::A, D1::K + D2::K>;
template <typename D1, typename D2>
using DimQuotient = Dim<D1::kg - D2::kg, D1::m - D2::m, D1::s - D2::s, D1::A - D2::A, D1::K - D2::K>;
template <typename D>
using DimSqrt = Dim<D::kg / 2, D::m / 2, D::s / 2, D::A / 2, D::K / 2>;

template <typename D>
inline constexpr bool dim_is_even = D::kg % 2 == 0 && D::m % 2 == 0 && D::s % 2 == 0 &&
                                    D::A % 2 == 0 && D::K % 2 == 0;

template <typename D, typename Scalar = double>
class Quantity {
public:
    using dimension = D;
    using scalar = Scalar;

    constexpr Quantity() = default;
    constexpr explicit Quantity(Scalar si_value) : value_(si_value) {}

    constexpr Scalar value() const { return value_; }

    constexpr Quantity operator+(Quantity o) const { return Quantity(value_ + o.value_); }
    constexpr Quantity operator-(Quantity o) const { return Quantity(value_ - o.value_); }
    constexpr Quantity operator-() const { return Quantity(-value_); }
    constexpr Quantity operator*(Scalar k) const { return Quantity(value_ * k); }
    constexpr Quantity operator/(Scalar k) const { return Quantity(value_ / k); }
    constexpr auto operator<=>(const Quantity&) const = default;

private:
    Scalar value_{};
};

template <typename D, typename S>
constexpr Quantity<D, S> operator*(S k, Quantity<D, S> q) { return q * k; }

template <typename D1, typename D2, typename S>
constexpr auto operator*(Quantity<D1, S> a, Quantity<D2, S> b) {
    using R = DimProduct<D1, D2>;
    if constexpr (std::is_same_v<R, Dim<0, 0, 0, 0, 0>>)
        return a.value() * b.value();
    else
        return Quantity<R, S>(a.value() * b.value());
}

template <typename D1, typename D2, typename S>
constexpr auto operator/(Quantity<D1, S> a, Quantity<D2, S> b) {
    using R = DimQuotient<D1, D2>;
    if constexpr (std::is_same_v<R, Dim<0, 0, 0, 0, 0>>)
        return a.value() / b.value();
    else
        return Quantity<R, S>(a.value() / b.value());
}

template <typename D, typename S>
constexpr auto operator/(S k, Quantity<D, S> q) {
    return Quantity<DimQuotient<Dim<0, 0, 0, 0, 0>, D>, S>(k / q.value());
}

template <typename D, typename S>
auto sqrt(Quantity<D, S> q) {
    static_assert(dim_is_even<D>, "square root of a quantity with odd dimension exponents");
    return Quantity<DimSqrt<D>, S>(std::sqrt(q.value()));
}

using Dimensionless = Dim<0, 0, 0, 0, 0>;
using Length = Quantity<Dim<0, 1, 0, 0, 0>>;
using Area = Quantity<Dim<0, 2, 0, 0, 0>>;
using Time = Quantity<Dim<0, 0, 1, 0, 0>>;
using Frequency = Quantity<Dim<0, 0, -1, 0, 0>>;
using Rate = Frequency;
using Power = Quantity<Dim<1, 2, -3, 0, 0>>;
using Energy = Quantity<Dim<1, 2, -2, 0, 0>>;
using Action = Quantity<Dim<1, 2, -1, 0, 0>>;
using Intensity = Quantity<Dim<1, 0, -3, 0, 0>>;
using Velocity = Quantity<Dim<0, 1, -1, 0, 0>>;
using Permittivity = Quantity<Dim<-1, -3, 4, 2, 0>>;
using DipoleMoment = Quantity<Dim<0, 1, 1, 1, 0>>;     // C m
using FieldTimeIntegral = Quantity<Dim<1, 1, -2, -1, 0>>;  // V s / m
using Temperature = Quantity<Dim<0, 0, 0, 0, 1>>;

namespace literals {
constexpr Length operator""_m(long double v) { return Length(static_cast<double>(v)); }
constexpr Length operator""_nm(long double v) { return Length(static_cast<double>(v) * 1e-9); }
constexpr Time operator""_s(long double v) { return Time(static_cast<double>(v)); }
constexpr Time operator""_ns(long double v) { return Time(static_cast<double>(v) * 1e-9); }
constexpr Time operator""_ps(long double v) { return Time(static_cast<double>(v) * 1e-12); }
constexpr Power operator""_W(long double v) { return Power(static_cast<double>(v)); }
constexpr Power operator""_nW(long double v) { return Power(static_cast<double>(v) * 1e-9); }
constexpr Frequency operator""_Hz(long double v) { return Frequency(static_cast<double>(v)); }
}  // namespace literals

}  // namespace siv::units
