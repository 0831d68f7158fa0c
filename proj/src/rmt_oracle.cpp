#include "freeconv/rmt_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "freeconv/parallel.hpp"
#include "freeconv/rect_conv.hpp"
#include "freeconv/square_conv.hpp"

namespace freeconv {

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x5eedu};
    return Rng(seq);
}

namespace {

Eigen::MatrixXcd ginibre(int rows, int cols, Rng& rng) {
    std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
    Eigen::MatrixXcd g(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) {
            const double re = nd(rng);
            g(i, j) = cplx(re, nd(rng));
        }
    return g;
}

}  // namespace

Eigen::MatrixXcd haar_isometry(int rows, int cols, Rng& rng) {
    if (rows < 1 || cols < 1 || cols > rows) throw DomainError("haar_isometry needs 1 <= cols <= rows");
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(ginibre(rows, cols, rng));
    Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(rows, cols);
    const auto& r = qr.matrixQR();
    for (int j = 0; j < cols; ++j) {
        const cplx d = r(j, j);
        const double a = std::abs(d);
        if (a > 0.0) q.col(j) *= d / a;
    }
    return q;
}

Eigen::MatrixXcd haar_unitary(int n, Rng& rng) {
    if (n < 1) throw DomainError("haar_unitary needs n >= 1");
    return haar_isometry(n, n, rng);
}

Eigen::MatrixXcd haar_unitary(int n, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    return haar_unitary(n, rng);
}

// ------------------------------------------------------------------ sampling

namespace {

/// Density curve for laws without a closed CDF, widening the window until the mass is captured.
DensityCurve solved_curve(const MeasurePtr& m) {
    double R = 4.0;
    if (m->is<SquareIDLaw>()) {
        const auto& s = m->as<SquareIDLaw>();
        const double sig = levy_sigma_total(*m);
        R = 4.0 * (1.0 + std::abs(s.gamma) + (std::isfinite(sig) ? std::sqrt(sig) : 1.0));
    }
    DensityCurve c;
    for (int round = 0; round < 10; ++round, R *= 2.0) {
        const int n = 2001;
        std::vector<double> grid(n);
        double lo = -R, hi = R;
        if (m->is<SquareIDLaw>()) {
            lo += m->as<SquareIDLaw>().gamma;
            hi += m->as<SquareIDLaw>().gamma;
        }
        for (int k = 0; k < n; ++k) grid[k] = lo + (hi - lo) * k / (n - 1);
        if (m->is<SquareIDLaw>()) {
            SquareConvHandle h(m, dirac(0.0));
            c = density_curve_square(h, grid);
        } else if (m->is<RectIDLaw>() || m->is<RectStable>()) {
            const double lam = m->is<RectIDLaw>() ? m->as<RectIDLaw>().lambda : m->as<RectStable>().lambda;
            RectConvHandle h(m, dirac(0.0), lam);
            c = rect_density_curve(h, grid);
        } else {
            c.resize(n);
            c.grid = grid;
            for (int k = 0; k < n; ++k) c.density[k] = density(*m, grid[k]);
            finalize_curve(c);
        }
        if (c.integral() + c.atom_mass() >= 1.0 - 1e-3) break;
    }
    return c;
}

}  // namespace

MeasureSampler::MeasureSampler(MeasurePtr m, std::size_t table_points) : m_(std::move(m)) {
    if (!m_) throw DomainError("sampler needs a measure");
    if (m_->is<CauchyLaw>()) {
        exact_cauchy_ = true;
        cauchy_t_ = m_->as<CauchyLaw>().t;
        return;
    }
    const bool discrete = m_->is<AtomicMeasure>() || m_->is<SymmetricBernoulli>();
    std::vector<std::pair<double, double>> atoms = atoms_of(*m_);
    std::function<double(double)> F;
    double lo = 0.0, hi = 0.0;
    DensityCurve curve;
    if (!discrete) {
        try {
            const auto sup = effective_support(*m_, 1e-7);
            lo = sup.first;
            hi = sup.second;
            (void)cdf(*m_, 0.5 * (lo + hi));
            F = [this](double x) { return cdf(*m_, x); };
        } catch (const DomainError&) {
            curve = solved_curve(m_);
            lo = curve.grid.front();
            hi = curve.grid.back();
            atoms.clear();
            for (const auto& a : curve.atoms) atoms.emplace_back(a.position, a.mass);
            F = curve_cdf(curve);
        }
    }
    double atom_total = 0.0;
    for (const auto& [x, w] : atoms) {
        atom_total += w;
        atoms_x_.push_back(x);
        atoms_cum_.push_back(atom_total);
    }
    if (discrete) return;
    const std::size_t n = std::max<std::size_t>(table_points, 16);
    table_x_.resize(n);
    table_cdf_.resize(n);
    // heavy tails: tan-spaced nodes keep resolution in the bulk
    const bool wide = hi - lo > 50.0;
    const double c = 0.5 * (lo + hi);
    const double th = wide ? std::atan(0.5 * (hi - lo)) : 0.0;
    double run = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double u = static_cast<double>(k) / (n - 1);
        const double x = wide ? c + std::tan(-th + 2.0 * th * u) : lo + (hi - lo) * u;
        double a_le = 0.0;
        for (const auto& [ax, w] : atoms)
            if (ax <= x) a_le += w;
        const double cont = atom_total < 1.0 ? (F(x) - a_le) / (1.0 - atom_total) : 0.0;
        run = std::max(run, std::clamp(cont, 0.0, 1.0));
        table_x_[k] = x;
        table_cdf_[k] = run;
    }
    // normalize to [0, 1] on the table
    const double f0 = table_cdf_.front(), f1 = table_cdf_.back();
    if (f1 > f0)
        for (double& v : table_cdf_) v = (v - f0) / (f1 - f0);
    if (!atoms_cum_.empty()) atoms_cum_.push_back(1.0);  // sentinel: continuous part
}

double MeasureSampler::quantile(double u) const {
    if (exact_cauchy_) return cauchy_t_ * std::tan(kPi * (u - 0.5));
    if (table_x_.empty()) {
        const auto it = std::lower_bound(atoms_cum_.begin(), atoms_cum_.end(), u * atoms_cum_.back());
        return atoms_x_[std::min<std::size_t>(it - atoms_cum_.begin(), atoms_x_.size() - 1)];
    }
    const auto it = std::lower_bound(table_cdf_.begin(), table_cdf_.end(), u);
    if (it == table_cdf_.begin()) return table_x_.front();
    if (it == table_cdf_.end()) return table_x_.back();
    const std::size_t k = it - table_cdf_.begin();
    const double c0 = table_cdf_[k - 1], c1 = table_cdf_[k];
    const double s = c1 > c0 ? (u - c0) / (c1 - c0) : 0.0;
    return table_x_[k - 1] + s * (table_x_[k] - table_x_[k - 1]);
}

double MeasureSampler::operator()(Rng& rng) const {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    if (exact_cauchy_ || atoms_cum_.empty()) return quantile(U(rng));
    if (table_x_.empty()) return quantile(U(rng));
    // atoms first, then the continuous part
    const double u = U(rng);
    const auto it = std::upper_bound(atoms_cum_.begin(), atoms_cum_.end() - 1, u);
    const std::size_t k = it - atoms_cum_.begin();
    if (k < atoms_x_.size()) return atoms_x_[k];
    return quantile(U(rng));
}

std::vector<double> MeasureSampler::draw(std::size_t n, Rng& rng) const {
    std::vector<double> out(n);
    for (double& v : out) v = (*this)(rng);
    return out;
}

// ------------------------------------------------------------------ spectra

std::string to_string(SpectrumKind k) {
    return k == SpectrumKind::Eigenvalues ? "eigenvalues" : "singular-symmetrized";
}

double EmpiricalSpectrum::cdf(double x) const {
    if (samples.empty()) return 0.0;
    const auto it = std::upper_bound(samples.begin(), samples.end(), x);
    return static_cast<double>(it - samples.begin()) / samples.size();
}

double EmpiricalSpectrum::mass_in(double lo, double hi) const {
    if (samples.empty() || !(hi > lo)) return 0.0;
    const auto a = std::upper_bound(samples.begin(), samples.end(), lo);
    const auto b = std::lower_bound(samples.begin(), samples.end(), hi);
    return b > a ? static_cast<double>(b - a) / samples.size() : 0.0;
}

std::string EmpiricalSpectrum::to_csv() const {
    std::string out = "x\n";
    char buf[64];
    for (double v : samples) {
        std::snprintf(buf, sizeof buf, "%.15g\n", v);
        out += buf;
    }
    return out;
}

namespace {

void merge_trials(EmpiricalSpectrum& e, std::vector<std::vector<double>>& parts) {
    std::size_t total = 0;
    for (const auto& p : parts) total += p.size();
    e.samples.clear();
    e.samples.reserve(total);
    for (const auto& p : parts) e.samples.insert(e.samples.end(), p.begin(), p.end());
    std::sort(e.samples.begin(), e.samples.end());
}

}  // namespace

EmpiricalSpectrum square_model_spectrum(const MeasurePtr& A, const MeasurePtr& B, int N, int trials,
                                        std::uint64_t seed) {
    if (N < 1 || trials < 1) throw DomainError("square model needs N >= 1 and trials >= 1");
    const MeasureSampler sa(A), sb(B);
    std::vector<std::vector<double>> parts(trials);
    parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
        Rng rng = make_rng(seed, t);
        const std::vector<double> a = sa.draw(N, rng), b = sb.draw(N, rng);
        Eigen::MatrixXcd H;
        if (std::all_of(b.begin(), b.end(), [](double v) { return v == 0.0; })) {
            parts[t] = a;
            return;
        }
        const Eigen::MatrixXcd U = haar_unitary(N, rng);
        Eigen::VectorXd bv = Eigen::Map<const Eigen::VectorXd>(b.data(), N);
        H = U * bv.asDiagonal() * U.adjoint();
        for (int i = 0; i < N; ++i) H(i, i) += a[i];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) throw ConvergenceError("eigensolver failed");
        parts[t].assign(es.eigenvalues().data(), es.eigenvalues().data() + N);
    });
    EmpiricalSpectrum e;
    e.n_matrices = trials;
    e.N = e.M = N;
    e.kind = SpectrumKind::Eigenvalues;
    e.seed = seed;
    merge_trials(e, parts);
    return e;
}

int rect_columns(int N, double lambda) {
    if (!(lambda > 0.0 && lambda <= 1.0)) throw DomainError("rectangular ratio must lie in (0, 1]");
    return static_cast<int>(std::lround(N / lambda));
}

EmpiricalSpectrum rect_model_spectrum(const MeasurePtr& A, const MeasurePtr& B, int N, int M,
                                      int trials, std::uint64_t seed) {
    if (N < 1 || M < N || trials < 1) throw DomainError("rect model needs 1 <= N <= M and trials >= 1");
    const MeasureSampler sa(A), sb(B);
    std::vector<std::vector<double>> parts(trials);
    parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
        Rng rng = make_rng(seed, t);
        const std::vector<double> a = sa.draw(N, rng), b = sb.draw(N, rng);
        std::vector<double> sv(N);
        if (std::all_of(b.begin(), b.end(), [](double v) { return v == 0.0; })) {
            for (int i = 0; i < N; ++i) sv[i] = std::abs(a[i]);
        } else {
            const Eigen::MatrixXcd U = haar_unitary(N, rng);
            // D_B V only sees the first N rows of V; those are a transposed M x N isometry
            const Eigen::MatrixXcd Q = haar_isometry(M, N, rng);
            Eigen::VectorXd bv = Eigen::Map<const Eigen::VectorXd>(b.data(), N);
            Eigen::MatrixXcd X = U * bv.asDiagonal() * Q.transpose();
            for (int i = 0; i < N; ++i) X(i, i) += a[i];
            Eigen::BDCSVD<Eigen::MatrixXcd> svd(X);
            if (svd.info() != Eigen::Success) throw ConvergenceError("SVD failed");
            for (int i = 0; i < N; ++i) sv[i] = svd.singularValues()(i);
        }
        parts[t].reserve(2 * N);
        for (double s : sv) {
            parts[t].push_back(s);
            parts[t].push_back(-s);
        }
    });
    EmpiricalSpectrum e;
    e.n_matrices = trials;
    e.N = N;
    e.M = M;
    e.kind = SpectrumKind::SingularSymmetrized;
    e.seed = seed;
    merge_trials(e, parts);
    return e;
}

// ------------------------------------------------------------------ distances

std::vector<double> covering_grid(const EmpiricalSpectrum& s, int points) {
    if (s.samples.empty()) throw DomainError("covering grid needs samples");
    if (points < 2) throw DomainError("covering grid needs at least 2 points");
    const auto& v = s.samples;
    const auto q = [&](double u) { return v[static_cast<std::size_t>(u * (v.size() - 1))]; };
    const double iqr = q(0.75) - q(0.25);
    const double lo = std::max(v.front(), q(0.001) - 3.0 * iqr);
    const double hi = std::min(v.back(), q(0.999) + 3.0 * iqr);
    const double pad = 0.1 * (hi - lo) + 0.1;
    std::vector<double> g(points);
    for (int k = 0; k < points; ++k) g[k] = (lo - pad) + (hi - lo + 2.0 * pad) * k / (points - 1);
    return g;
}

std::function<double(double)> curve_cdf(const DensityCurve& curve) {
    const std::size_t n = curve.size();
    std::vector<double> dens = curve.quadrature_density();
    std::vector<double> cum(n, 0.0);
    for (std::size_t k = 1; k < n; ++k)
        cum[k] = cum[k - 1] + 0.5 * (curve.grid[k] - curve.grid[k - 1]) * (dens[k] + dens[k - 1]);
    const double missing = std::max(0.0, 1.0 - (n ? cum.back() : 0.0) - curve.atom_mass());
    std::vector<AtomEntry> atoms = curve.atoms;
    return [grid = curve.grid, dens = std::move(dens), cum = std::move(cum), atoms = std::move(atoms),
            missing](double x) {
        double s = 0.0;
        if (!grid.empty() && x >= grid.front()) {
            s = 0.5 * missing;
            if (x >= grid.back()) {
                s += cum.back() + 0.5 * missing;
            } else {
                const std::size_t k = std::upper_bound(grid.begin(), grid.end(), x) - grid.begin() - 1;
                const double t0 = grid[k], t1 = grid[k + 1];
                const double d0 = dens[k], dx = d0 + (dens[k + 1] - d0) * (x - t0) / (t1 - t0);
                s += cum[k] + 0.5 * (x - t0) * (d0 + dx);
            }
        }
        for (const auto& a : atoms)
            if (a.position <= x) s += a.mass;
        return std::clamp(s, 0.0, 1.0);
    };
}

double ks_distance(const EmpiricalSpectrum& e, const std::function<double(double)>& F) {
    const auto& s = e.samples;
    const double n = static_cast<double>(s.size());
    double d = 0.0;
    for (std::size_t i = 0; i < s.size();) {
        std::size_t j = i;
        while (j < s.size() && s[j] == s[i]) ++j;
        const double x = s[i];
        const double below = F(std::nextafter(x, -INFINITY)), at = F(x);
        d = std::max({d, std::abs(i / n - below), std::abs(j / n - at)});
        i = j;
    }
    return d;
}

double ks_distance(const EmpiricalSpectrum& e, const DensityCurve& target) {
    return ks_distance(e, curve_cdf(target));
}

std::string spectrum_summary_json(const EmpiricalSpectrum& e, double ks) {
    nlohmann::ordered_json j;
    j["ks"] = ks;
    j["n"] = e.samples.size();
    j["dims"] = {e.N, e.M};
    j["seed"] = e.seed;
    j["kind"] = to_string(e.kind);
    j["trials"] = e.n_matrices;
    return j.dump(2);
}

}  // namespace freeconv
