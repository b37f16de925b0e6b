#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>

namespace ecd {

using Complex = std::complex<double>;

// Metric diag(1,-1,-1,-1). Not configurable.
inline constexpr std::array<double, 4> metric_diag{1.0, -1.0, -1.0, -1.0};

struct FourVector
{
    std::array<double, 4> c{0.0, 0.0, 0.0, 0.0};

    FourVector() = default;
    FourVector(double t, double x, double y, double z) : c{t, x, y, z} {}

    double& operator[](int i) { return c[i]; }
    double operator[](int i) const { return c[i]; }

    FourVector& operator+=(const FourVector& o)
    {
        for (int i = 0; i < 4; ++i)
            c[i] += o.c[i];
        return *this;
    }
    FourVector& operator-=(const FourVector& o)
    {
        for (int i = 0; i < 4; ++i)
            c[i] -= o.c[i];
        return *this;
    }
    FourVector& operator*=(double a)
    {
        for (auto& v : c)
            v *= a;
        return *this;
    }
    bool operator==(const FourVector& o) const = default;

    // index lowered with the metric
    FourVector lowered() const { return {c[0], -c[1], -c[2], -c[3]}; }
    double euclidean_norm() const
    {
        return std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2] + c[3] * c[3]);
    }
    double spatial_norm() const { return std::sqrt(c[1] * c[1] + c[2] * c[2] + c[3] * c[3]); }
};

inline FourVector operator+(FourVector a, const FourVector& b) { return a += b; }
inline FourVector operator-(FourVector a, const FourVector& b) { return a -= b; }
inline FourVector operator*(double s, FourVector a) { return a *= s; }
inline FourVector operator*(FourVector a, double s) { return a *= s; }
inline FourVector operator-(const FourVector& a) { return -1.0 * a; }

inline FourVector unit_vector(int mu)
{
    FourVector e;
    e[mu] = 1.0;
    return e;
}

double minkowski_dot(const FourVector& u, const FourVector& v);
inline double minkowski_square(const FourVector& u) { return minkowski_dot(u, u); }

using Matrix4 = std::array<std::array<double, 4>, 4>;

// F^{mu nu} with both indices up, antisymmetric by construction.
class AntisymTensor
{
  public:
    AntisymTensor() = default;
    // Takes the upper triangle of `m`; the lower triangle is ignored.
    static AntisymTensor from_upper(const Matrix4& m);
    // F^{0i} = -E^i, F^{ij} = -eps_{ijk} B^k
    static AntisymTensor from_fields(const std::array<double, 3>& E, const std::array<double, 3>& B);

    double operator()(int mu, int nu) const { return m_[mu][nu]; }
    // F^mu_nu = F^{mu a} g_{a nu}
    double mixed(int mu, int nu) const { return m_[mu][nu] * metric_diag[nu]; }
    // F_{mu nu}
    double lower(int mu, int nu) const { return metric_diag[mu] * metric_diag[nu] * m_[mu][nu]; }
    const Matrix4& components() const { return m_; }

    std::array<double, 3> electric() const { return {m_[1][0], m_[2][0], m_[3][0]}; }
    std::array<double, 3> magnetic() const { return {-m_[2][3], -m_[3][1], -m_[1][2]}; }

    // F^{mu nu} F_{mu nu}
    double invariant_FF() const;

    AntisymTensor operator*(double a) const;
    AntisymTensor operator+(const AntisymTensor& o) const;
    AntisymTensor operator-() const { return (*this) * -1.0; }

  private:
    Matrix4 m_{};
};

// Lorentz boost with velocity beta; throws DomainError for |beta| >= 1.
FourVector lorentz_boost(const FourVector& v, const std::array<double, 3>& beta);
Matrix4 boost_matrix(const std::array<double, 3>& beta);
AntisymTensor boost_tensor(const AntisymTensor& F, const std::array<double, 3>& beta);

// f(x) -> lambda^d f(lambda^{-1} x)
struct ScaleMap
{
    double lambda = 1.0;
    double dimension = 0.0;

    ScaleMap(double lambda_, double dimension_);
    ScaleMap compose(const ScaleMap& inner) const;
    double prefactor() const { return std::pow(lambda, dimension); }
};

template<class F>
auto scale_field(F f, ScaleMap map)
{
    return [f = std::move(f), map](const FourVector& x) {
        return map.prefactor() * f((1.0 / map.lambda) * x);
    };
}

} // namespace ecd
