#include "ecd/minkowski.hpp"

#include "ecd/errors.hpp"

namespace ecd {

double minkowski_dot(const FourVector& u, const FourVector& v)
{
    return u[0] * v[0] - u[1] * v[1] - u[2] * v[2] - u[3] * v[3];
}

AntisymTensor AntisymTensor::from_upper(const Matrix4& m)
{
    AntisymTensor F;
    for (int mu = 0; mu < 4; ++mu) {
        for (int nu = mu + 1; nu < 4; ++nu) {
            F.m_[mu][nu] = m[mu][nu];
            F.m_[nu][mu] = -m[mu][nu];
        }
    }
    return F;
}

AntisymTensor AntisymTensor::from_fields(const std::array<double, 3>& E,
                                         const std::array<double, 3>& B)
{
    Matrix4 m{};
    m[0][1] = -E[0];
    m[0][2] = -E[1];
    m[0][3] = -E[2];
    m[1][2] = -B[2];
    m[1][3] = B[1];
    m[2][3] = -B[0];
    return from_upper(m);
}

double AntisymTensor::invariant_FF() const
{
    double sum = 0.0;
    for (int mu = 0; mu < 4; ++mu)
        for (int nu = 0; nu < 4; ++nu)
            sum += m_[mu][nu] * lower(mu, nu);
    return sum;
}

AntisymTensor AntisymTensor::operator*(double a) const
{
    AntisymTensor F;
    for (int mu = 0; mu < 4; ++mu)
        for (int nu = 0; nu < 4; ++nu)
            F.m_[mu][nu] = a * m_[mu][nu];
    return F;
}

AntisymTensor AntisymTensor::operator+(const AntisymTensor& o) const
{
    AntisymTensor F;
    for (int mu = 0; mu < 4; ++mu)
        for (int nu = 0; nu < 4; ++nu)
            F.m_[mu][nu] = m_[mu][nu] + o.m_[mu][nu];
    return F;
}

Matrix4 boost_matrix(const std::array<double, 3>& beta)
{
    const double b2 = beta[0] * beta[0] + beta[1] * beta[1] + beta[2] * beta[2];
    if (!(b2 < 1.0))
        throw DomainError("lorentz_boost: |beta| must be < 1");
    Matrix4 L{};
    if (b2 == 0.0) {
        for (int i = 0; i < 4; ++i)
            L[i][i] = 1.0;
        return L;
    }
    const double g = 1.0 / std::sqrt(1.0 - b2);
    L[0][0] = g;
    for (int i = 0; i < 3; ++i) {
        L[0][i + 1] = g * beta[i];
        L[i + 1][0] = g * beta[i];
        for (int j = 0; j < 3; ++j)
            L[i + 1][j + 1] = (i == j ? 1.0 : 0.0) + (g - 1.0) * beta[i] * beta[j] / b2;
    }
    return L;
}

FourVector lorentz_boost(const FourVector& v, const std::array<double, 3>& beta)
{
    const Matrix4 L = boost_matrix(beta);
    FourVector out;
    for (int mu = 0; mu < 4; ++mu)
        for (int nu = 0; nu < 4; ++nu)
            out[mu] += L[mu][nu] * v[nu];
    return out;
}

AntisymTensor boost_tensor(const AntisymTensor& F, const std::array<double, 3>& beta)
{
    const Matrix4 L = boost_matrix(beta);
    Matrix4 out{};
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            double sum = 0.0;
            for (int c = 0; c < 4; ++c)
                for (int d = 0; d < 4; ++d)
                    sum += L[a][c] * L[b][d] * F(c, d);
            out[a][b] = sum;
        }
    return AntisymTensor::from_upper(out);
}

ScaleMap::ScaleMap(double lambda_, double dimension_) : lambda(lambda_), dimension(dimension_)
{
    if (!(lambda > 0.0))
        throw DomainError("ScaleMap: lambda must be positive");
}

ScaleMap ScaleMap::compose(const ScaleMap& inner) const
{
    if (inner.dimension != dimension)
        throw DomainError("ScaleMap::compose: dimensions differ");
    return ScaleMap(lambda * inner.lambda, dimension);
}

} // namespace ecd
