#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "freeconv/inversion.hpp"
#include "freeconv/measures.hpp"

namespace freeconv {

using Rng = std::mt19937_64;

/// Independent stream for (seed, stream index); trials use stream = trial number.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

/// Haar unitary: complex Ginibre, QR, then R-diagonal phases moved into Q.
Eigen::MatrixXcd haar_unitary(int n, Rng& rng);
Eigen::MatrixXcd haar_unitary(int n, std::uint64_t seed);
/// First `cols` columns of a Haar unitary of size `rows`.
Eigen::MatrixXcd haar_isometry(int rows, int cols, Rng& rng);

/// Draws from a measure. Atomic laws are categorical; everything else goes through
/// an inverse CDF tabulated on 10^4 points (closed-form CDF when available, else a solved density curve).
class MeasureSampler {
public:
    explicit MeasureSampler(MeasurePtr m, std::size_t table_points = 10000);

    double operator()(Rng& rng) const;
    std::vector<double> draw(std::size_t n, Rng& rng) const;
    /// Quantile from the table (u in [0, 1]).
    double quantile(double u) const;
    const Measure& measure() const { return *m_; }

private:
    MeasurePtr m_;
    std::vector<double> atoms_x_, atoms_cum_;    // categorical
    std::vector<double> table_x_, table_cdf_;    // inverse-CDF table
    bool exact_cauchy_ = false;
    double cauchy_t_ = 1.0;
};

enum class SpectrumKind { Eigenvalues, SingularSymmetrized };

std::string to_string(SpectrumKind k);

struct EmpiricalSpectrum {
    std::vector<double> samples;  // sorted ascending
    int n_matrices = 0;
    int N = 0, M = 0;
    SpectrumKind kind = SpectrumKind::Eigenvalues;
    std::uint64_t seed = 0;

    /// Right-continuous empirical CDF.
    double cdf(double x) const;
    /// Fraction of samples in the open interval (lo, hi).
    double mass_in(double lo, double hi) const;
    /// One column "x" of sorted samples.
    std::string to_csv() const;
};

/// Eigenvalues of diag(a) + U diag(b) U*, a ~ A, b ~ B i.i.d., pooled over trials.
EmpiricalSpectrum square_model_spectrum(const MeasurePtr& A, const MeasurePtr& B, int N, int trials,
                                        std::uint64_t seed);

/// M = round(N / lambda).
int rect_columns(int N, double lambda);

/// Symmetrized singular values of D_A + U D_B V (N x M, diagonal-rectangular D), pooled.
EmpiricalSpectrum rect_model_spectrum(const MeasurePtr& A, const MeasurePtr& B, int N, int M,
                                      int trials, std::uint64_t seed);

/// Solver grid for comparing with a spectrum: the sample range, clipped to the 0.1% / 99.9%
/// quantiles widened by 3 IQR so heavy tails do not starve the bulk, then padded by 10%.
std::vector<double> covering_grid(const EmpiricalSpectrum& s, int points);

/// Piecewise-linear CDF of a density curve with atoms, tabulated once.
std::function<double(double)> curve_cdf(const DensityCurve& curve);

/// sup |F_emp - F| over the sample points (both one-sided limits of F_emp).
double ks_distance(const EmpiricalSpectrum& e, const std::function<double(double)>& cdf);
double ks_distance(const EmpiricalSpectrum& e, const DensityCurve& target);

/// {"ks":..,"n":..,"dims":[N,M],"seed":..}
std::string spectrum_summary_json(const EmpiricalSpectrum& e, double ks);

}  // namespace freeconv
