#pragma once

// Reference propagator for small lattices: builds the recoil-unit
// Hamiltonian as a dense matrix straight from the amplitude equations and
// exponentiates it through a symmetric eigendecomposition. Shares no code
// with the library's integrator.

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace bragg_qnd::testing
{

class DenseOracle
{
public:
    DenseOracle(int l0, double chi_bar, int n, int l_min, int l_max) : l_min_(l_min)
    {
        const int size = (l_max - l_min) / 2 + 1;
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(size, size);
        for (int j = 0; j < size; ++j)
        {
            const int l = l_min + 2 * j;
            h(j, j) = static_cast<double>(l) * (l + l0);
            if (j + 1 < size)
                h(j, j + 1) = h(j + 1, j) = -0.5 * chi_bar * n;
        }
        solver_.compute(h);
    }

    /// exp(-i H t) applied to the unit vector at l = 0.
    std::vector<std::complex<double>> propagate_from_origin(double t) const
    {
        const auto& v = solver_.eigenvectors();
        const auto& e = solver_.eigenvalues();
        const Eigen::Index origin = -l_min_ / 2;
        const Eigen::Index size = v.rows();
        Eigen::VectorXcd coeff(size);
        for (Eigen::Index k = 0; k < size; ++k)
            coeff(k) = v(origin, k) * std::exp(std::complex<double>(0.0, -e(k) * t));
        const Eigen::VectorXcd out = v.cast<std::complex<double>>() * coeff;
        return {out.data(), out.data() + size};
    }

private:
    int l_min_;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver_;
};

}  // namespace bragg_qnd::testing
