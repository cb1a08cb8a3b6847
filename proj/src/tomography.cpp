#include "boslink/tomography.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "boslink/config.hpp"
#include "boslink/parallel.hpp"

namespace boslink {

namespace {

double uniform53(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace

// --- Wigner ---------------------------------------------------------------------

Matrix displaced_parity_elements(Complex alpha, int dim) {
    if (dim < 1) throw ValidationError("displaced_parity_elements: dim must be >= 1");
    // Zero-padded workspace: displaced Fock states up to dim-1 must fit with
    // negligible tail mass.
    const double n_disp = std::norm(alpha);
    const int pad = dim + static_cast<int>(std::ceil(n_disp)) + 24 +
                    static_cast<int>(std::ceil(2.5 * std::sqrt(n_disp * (dim + 1.0))));
    Matrix a = Matrix::Zero(pad, pad);
    for (int k = 1; k < pad; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
    const Matrix gen = alpha * a.adjoint() - std::conj(alpha) * a;
    const Matrix d = expm_matrix(gen);
    Matrix dp = d;
    for (int k = 0; k < pad; ++k) {
        if (k % 2 == 1) dp.col(k) = -dp.col(k);
    }
    const Matrix kernel = dp * d.adjoint(); // D P D†
    return kernel.topLeftCorner(dim, dim);
}

double wigner_point(const Matrix& rho_cavity, Complex alpha) {
    if (rho_cavity.rows() != rho_cavity.cols()) {
        throw ValidationError("wigner_point: density matrix not square");
    }
    const Matrix k = displaced_parity_elements(alpha, static_cast<int>(rho_cavity.rows()));
    return kWignerConvention * (rho_cavity * k).trace().real();
}

double WignerMap::integral() const {
    const double h = grid.step();
    return values.sum() * h * h;
}

int WignerMap::radial_sign_changes() const {
    const int mid = grid.points / 2;
    int changes = 0;
    double prev = values(mid, mid);
    for (int j = mid + 1; j < grid.points; ++j) {
        const double cur = values(mid, j);
        if (prev * cur < 0.0) ++changes;
        if (cur != 0.0) prev = cur;
    }
    return changes;
}

std::string WignerMap::to_csv() const {
    std::ostringstream out;
    out << "re_alpha,im_alpha,W\n";
    for (int i = 0; i < grid.points; ++i) {
        for (int j = 0; j < grid.points; ++j) {
            const Complex a = grid.alpha(j, i);
            out << format_double(a.real()) << "," << format_double(a.imag()) << ","
                << format_double(values(i, j)) << "\n";
        }
    }
    return out.str();
}

namespace {

void check_grid_guard(const WignerGrid& grid, const HilbertConfig& config) {
    const double max_n = 2.0 * grid.extent * grid.extent; // grid corner
    if (grid.points < 2) throw ValidationError("wigner: grid needs at least 2 points");
    if (max_n > static_cast<double>(config.cavity_dim - 6) * 2.0 + 1e-9) {
        // Guard is stated for the axis extent; the corner reaches sqrt(2) further.
        throw TruncationError("wigner: grid extent exceeds the truncation guard");
    }
    if (grid.extent * grid.extent > static_cast<double>(config.cavity_dim - 6) + 1e-9) {
        throw TruncationError("wigner: grid extent exceeds the truncation guard");
    }
}

} // namespace

WignerMap wigner_cavity(const Matrix& rho_cavity, const HilbertConfig& config,
                        const WignerGrid& grid, int threads) {
    check_grid_guard(grid, config);
    if (rho_cavity.rows() != config.cavity_dim) {
        throw ValidationError("wigner_cavity: density matrix dim != cavity_dim");
    }
    const int dim = config.cavity_dim;
    WignerMap map;
    map.grid = grid;
    map.values.resize(grid.points, grid.points);

    // D(alpha) = R(phi) D(|alpha|) R(-phi) with R = diag(e^{i n phi}), so one
    // radial kernel serves every grid point on the same circle. Points are
    // grouped by the integer doubled offsets from the grid center, which is
    // exact. W = (2/pi) sum_{mn} rho(n,m) K_{mn}(r) e^{i(m-n)phi}.
    std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> rings;
    for (int i = 0; i < grid.points; ++i) {
        const int q2 = std::abs(2 * i - (grid.points - 1));
        for (int j = 0; j < grid.points; ++j) {
            const int p2 = std::abs(2 * j - (grid.points - 1));
            rings[{std::max(p2, q2), std::min(p2, q2)}].push_back({i, j});
        }
    }
    std::vector<std::pair<std::pair<int, int>, std::vector<std::pair<int, int>>>> ring_list(
        rings.begin(), rings.end());

    parallel_for(static_cast<int>(ring_list.size()), threads, [&](int ring_index) {
        const auto& [key, members] = ring_list[static_cast<std::size_t>(ring_index)];
        const double radius =
            0.5 * grid.step() * std::sqrt(static_cast<double>(key.first) * key.first +
                                          static_cast<double>(key.second) * key.second);
        const Matrix kernel = displaced_parity_elements(Complex(radius, 0.0), dim);
        for (const auto& [i, j] : members) {
            const Complex alpha = grid.alpha(j, i);
            const double phi = (radius > 0.0) ? std::arg(alpha) : 0.0;
            Complex trace(0.0, 0.0);
            for (int m = 0; m < dim; ++m) {
                for (int n = 0; n < dim; ++n) {
                    trace += rho_cavity(n, m) * kernel(m, n) *
                             std::exp(Complex(0.0, (m - n) * phi));
                }
            }
            map.values(i, j) = kWignerConvention * trace.real();
        }
    });
    return map;
}

WignerMap wigner(const DensityMatrix& state, const WignerGrid& grid, int threads) {
    return wigner_cavity(partial_trace_qubit(state.matrix, state.config), state.config, grid,
                         threads);
}

WignerMap wigner(const QuantumState& state, const WignerGrid& grid, int threads) {
    return wigner(pure_density(state), grid, threads);
}

double wigner_rotation_asymmetry(const Matrix& rho_cavity, const HilbertConfig& config,
                                 const WignerGrid& grid, int fold, int threads) {
    if (fold < 1) throw ValidationError("wigner_rotation_asymmetry: fold must be >= 1");
    check_grid_guard(grid, config);
    const Complex rot = std::exp(Complex(0.0, kTwoPi / fold));
    Eigen::MatrixXd deviation(grid.points, grid.points);
    parallel_for(grid.points, threads, [&](int i) {
        for (int j = 0; j < grid.points; ++j) {
            const Complex a = grid.alpha(j, i);
            deviation(i, j) =
                std::abs(wigner_point(rho_cavity, a) - wigner_point(rho_cavity, rot * a));
        }
    });
    return deviation.maxCoeff();
}

// --- photon distributions ---------------------------------------------------------

double PhotonDistribution::mean() const {
    double m = 0.0;
    for (Eigen::Index n = 0; n < probabilities.size(); ++n) m += n * probabilities(n);
    return m;
}

double PhotonDistribution::poisson_deviation() const {
    const double nbar = mean();
    double dev = 0.0;
    double log_nbar = nbar > 0 ? std::log(nbar) : 0.0;
    double lgamma_acc = 0.0; // log(n!)
    for (Eigen::Index n = 0; n < probabilities.size(); ++n) {
        if (n > 0) lgamma_acc += std::log(static_cast<double>(n));
        const double log_p = -nbar + n * log_nbar - lgamma_acc;
        const double poisson = (nbar == 0.0) ? (n == 0 ? 1.0 : 0.0) : std::exp(log_p);
        dev = std::max(dev, std::abs(probabilities(n) - poisson));
    }
    return dev;
}

namespace {

Eigen::VectorXd multinomial_frequencies(const Eigen::VectorXd& p, long long shots,
                                        std::mt19937_64& rng) {
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(p.size());
    std::vector<double> cdf(p.size());
    double acc = 0.0;
    for (Eigen::Index n = 0; n < p.size(); ++n) {
        acc += std::max(0.0, p(n));
        cdf[static_cast<std::size_t>(n)] = acc;
    }
    for (long long s = 0; s < shots; ++s) {
        const double u = uniform53(rng) * acc;
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        const Eigen::Index n = std::min<Eigen::Index>(it - cdf.begin(), p.size() - 1);
        counts(n) += 1.0;
    }
    return counts / static_cast<double>(shots);
}

// 2x2 propagator exp(-i (c0 I + cx sx + cy sy + cz sz) dt), closed form.
Eigen::Matrix2cd two_level_step(double c0, double cx, double cy, double cz, double dt) {
    const double r = std::sqrt(cx * cx + cy * cy + cz * cz);
    Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
    const Complex phase = std::exp(Complex(0.0, -c0 * dt));
    if (r < 1e-300) return phase * u;
    // cos(r dt) I - i sin(r dt) (n . sigma), n = (cx, cy, cz)/r
    const double c = std::cos(r * dt), s = std::sin(r * dt);
    const Complex mi(0.0, -1.0);
    u(0, 0) = c + mi * s * (cz / r);
    u(1, 1) = c - mi * s * (cz / r);
    u(0, 1) = mi * s * (cx / r) - s * (cy / r);
    u(1, 0) = mi * s * (cx / r) + s * (cy / r);
    return phase * u;
}

} // namespace

PhotonDistribution photon_distribution(const DensityMatrix& state, PhotonMeasurementMode mode,
                                       const SystemParams& params, long long shots,
                                       std::uint64_t seed, const SelectivePulseOptions& options) {
    const HilbertConfig& cfg = state.config;
    const int nmax = cfg.cavity_dim;
    PhotonDistribution dist;
    dist.provenance = mode;
    dist.shots = shots;

    if (mode == PhotonMeasurementMode::Ideal) {
        Eigen::VectorXd p(nmax);
        for (int n = 0; n < nmax; ++n) {
            p(n) = state.matrix(cfg.index(0, n), cfg.index(0, n)).real() +
                   state.matrix(cfg.index(1, n), cfg.index(1, n)).real();
        }
        p /= p.sum();
        if (shots > 0) {
            std::mt19937_64 rng(seed);
            p = multinomial_frequencies(p, shots, rng);
        }
        dist.probabilities = p;
        return dist;
    }

    // Selective pi-pulses: bandwidth ~ 1/sigma must sit well below chi.
    params.validate();
    if (1.0 / options.sigma > 0.5 * params.chi_sq) {
        throw ValidationError("photon_distribution: selective pulse sigma too short for chi; "
                              "insufficient number selectivity");
    }
    const double sigma = options.sigma;
    const double dt = options.dt;
    const double duration = 6.0 * sigma;
    const int segments = static_cast<int>(std::lround(duration / dt));

    // Gaussian envelope normalized to pulse area pi on the discrete grid.
    Eigen::VectorXd envelope(segments);
    for (int k = 0; k < segments; ++k) {
        const double t = (k + 0.5) * dt - duration / 2.0;
        envelope(k) = std::exp(-t * t / (2.0 * sigma * sigma));
    }
    envelope *= M_PI / (envelope.sum() * dt);

    // The drive is block-diagonal over cavity levels; evolve each 2x2 block.
    Eigen::VectorXd p_meas(nmax);
    for (int target = 0; target < nmax; ++target) {
        double pe = 0.0;
        for (int n = 0; n < nmax; ++n) {
            // Block Hamiltonian at cavity level n in the resonant frame:
            // diag(-K/2 n(n-1), -K/2 n(n-1) - chi n) + drive.
            const double eg = -0.5 * params.kerr_g * n * (n - 1.0);
            const double ee = eg - params.chi_sq * n;
            Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
            for (int k = 0; k < segments; ++k) {
                const double t = (k + 0.5) * dt;
                // Tone at the target-shifted transition: u_c = A e^{+i chi target t}.
                const double ui = envelope(k) * std::cos(params.chi_sq * target * t);
                const double uq = envelope(k) * std::sin(params.chi_sq * target * t);
                const double c0 = 0.5 * (eg + ee);
                const double cz = 0.5 * (eg - ee);
                u = two_level_step(c0, 0.5 * ui, 0.5 * uq, cz, dt) * u;
            }
            const Eigen::Matrix2cd rho_n =
                (Eigen::Matrix2cd() << state.matrix(cfg.index(0, n), cfg.index(0, n)),
                 state.matrix(cfg.index(0, n), cfg.index(1, n)),
                 state.matrix(cfg.index(1, n), cfg.index(0, n)),
                 state.matrix(cfg.index(1, n), cfg.index(1, n)))
                    .finished();
            pe += ((u * rho_n * u.adjoint())(1, 1)).real();
        }
        p_meas(target) = (1.0 - params.readout_error_e) * pe +
                         params.readout_error_g * (1.0 - pe);
    }

    if (shots > 0) {
        std::mt19937_64 rng(seed);
        for (int n = 0; n < nmax; ++n) {
            long long hits = 0;
            for (long long s = 0; s < shots; ++s) {
                if (uniform53(rng) < p_meas(n)) ++hits;
            }
            p_meas(n) = static_cast<double>(hits) / static_cast<double>(shots);
        }
    }
    if (options.unfold_readout) {
        const double denom = 1.0 - params.readout_error_g - params.readout_error_e;
        for (int n = 0; n < nmax; ++n) {
            p_meas(n) = std::max(0.0, (p_meas(n) - params.readout_error_g) / denom);
        }
    }
    const double total = p_meas.sum();
    if (total <= 0.0) throw NumericalError("photon_distribution: empty selective distribution");
    dist.probabilities = p_meas / total;
    return dist;
}

PhotonDistribution photon_distribution(const QuantumState& state, PhotonMeasurementMode mode,
                                       const SystemParams& params, long long shots,
                                       std::uint64_t seed, const SelectivePulseOptions& options) {
    return photon_distribution(pure_density(state), mode, params, shots, seed, options);
}

// --- maximum-likelihood reconstruction ---------------------------------------------

namespace {

struct PovmOutcome {
    Matrix element;
    double frequency;
    double weight;
};

std::vector<PovmOutcome> build_povm(const std::vector<TomographyRecord>& records, int dim) {
    std::vector<PovmOutcome> outcomes;
    const Matrix identity = Matrix::Identity(dim, dim);
    for (const auto& rec : records) {
        if (rec.parity.has_value() == rec.counts.has_value()) {
            throw ValidationError(
                "mle_reconstruct: each record needs exactly one of parity or counts");
        }
        if (rec.parity) {
            if (*rec.parity < -1.0 - 1e-9 || *rec.parity > 1.0 + 1e-9) {
                throw ValidationError("mle_reconstruct: parity outside [-1, 1]");
            }
            const Matrix k = displaced_parity_elements(rec.alpha, dim);
            const Matrix even = (identity + k) / 2.0;
            const double f_even = (1.0 + *rec.parity) / 2.0;
            outcomes.push_back({even, f_even, rec.weight});
            outcomes.push_back({identity - even, 1.0 - f_even, rec.weight});
        } else {
            const Eigen::VectorXd& counts = *rec.counts;
            const double n_disp = std::norm(rec.alpha);
            const int pad =
                dim + static_cast<int>(std::ceil(n_disp)) + 24 +
                static_cast<int>(std::ceil(2.5 * std::sqrt(n_disp * (dim + 1.0))));
            Matrix a = Matrix::Zero(pad, pad);
            for (int k = 1; k < pad; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
            const Matrix d = expm_matrix(rec.alpha * a.adjoint() - std::conj(rec.alpha) * a);
            Matrix used = Matrix::Zero(dim, dim);
            const int n_out = std::min<int>(static_cast<int>(counts.size()), pad);
            for (int n = 0; n < n_out; ++n) {
                const Vector col = d.block(0, n, dim, 1);
                const Matrix e = col * col.adjoint();
                outcomes.push_back({e, std::max(0.0, counts(n)), rec.weight});
                used += e;
            }
            const double seen = counts.head(n_out).sum();
            outcomes.push_back({identity - used, std::max(0.0, 1.0 - seen), rec.weight});
        }
    }
    return outcomes;
}

double log_likelihood(const std::vector<PovmOutcome>& outcomes, const Matrix& rho) {
    double l = 0.0;
    for (const auto& o : outcomes) {
        if (o.frequency <= 0.0) continue;
        const double p = std::max(1e-300, (o.element * rho).trace().real());
        l += o.weight * o.frequency * std::log(p);
    }
    return l;
}

} // namespace

MleResult mle_reconstruct(const std::vector<TomographyRecord>& records,
                          const HilbertConfig& config, const MleOptions& options) {
    config.validate();
    const int dim = options.dim > 0 ? options.dim : config.cavity_dim;
    if (records.empty()) throw ValidationError("mle_reconstruct: no measurement records");

    MleResult result;
    result.rank_warning = static_cast<int>(records.size()) < dim * dim;

    const auto outcomes = build_povm(records, dim);
    Matrix rho = Matrix::Identity(dim, dim) / static_cast<double>(dim);
    double loglik = log_likelihood(outcomes, rho);
    result.loglik_history.push_back(loglik);

    int iter = 0;
    for (; iter < options.max_iters; ++iter) {
        // R = sum_o w f_o / p_o E_o, normalized so R ~ O(1).
        Matrix r = Matrix::Zero(dim, dim);
        double total_weight = 0.0;
        for (const auto& o : outcomes) {
            total_weight += o.weight * o.frequency;
            if (o.frequency <= 0.0) continue;
            const double p = std::max(1e-300, (o.element * rho).trace().real());
            r += (o.weight * o.frequency / p) * o.element;
        }
        if (total_weight <= 0.0) throw ValidationError("mle_reconstruct: all frequencies zero");
        r /= total_weight;

        // Full R rho R step, with dilution fallback to keep the likelihood
        // non-decreasing.
        bool improved = false;
        double s = 1.0;
        const Matrix identity = Matrix::Identity(dim, dim);
        while (s > 1e-8) {
            const Matrix mix = s * r + (1.0 - s) * identity;
            Matrix cand = mix * rho * mix;
            cand = (cand + cand.adjoint().eval()) / 2.0;
            const double tr = cand.trace().real();
            if (tr > 1e-300) {
                cand /= tr;
                const double cand_loglik = log_likelihood(outcomes, cand);
                if (cand_loglik >= loglik) {
                    const double gain = cand_loglik - loglik;
                    rho = cand;
                    loglik = cand_loglik;
                    result.loglik_history.push_back(loglik);
                    improved = true;
                    if (gain < options.loglik_tolerance) {
                        result.converged = true;
                    }
                    break;
                }
            }
            s /= 2.0;
        }
        if (!improved) {
            result.converged = true;
            break;
        }
        if (result.converged) {
            ++iter;
            break;
        }
    }

    result.iterations = iter;
    result.rho = rho;
    return result;
}

std::vector<TomographyRecord> parity_records_from_state(const Matrix& rho_cavity,
                                                        const WignerGrid& grid) {
    std::vector<TomographyRecord> records;
    records.reserve(static_cast<std::size_t>(grid.points) * grid.points);
    for (int i = 0; i < grid.points; ++i) {
        for (int j = 0; j < grid.points; ++j) {
            const Complex alpha = grid.alpha(j, i);
            const Matrix k =
                displaced_parity_elements(alpha, static_cast<int>(rho_cavity.rows()));
            TomographyRecord rec;
            rec.alpha = alpha;
            rec.parity = std::clamp((rho_cavity * k).trace().real(), -1.0, 1.0);
            records.push_back(std::move(rec));
        }
    }
    return records;
}

// --- process tomography --------------------------------------------------------------

namespace {

const std::array<Eigen::Matrix2cd, 4>& pauli_basis() {
    static const std::array<Eigen::Matrix2cd, 4> paulis = [] {
        std::array<Eigen::Matrix2cd, 4> p;
        p[0] = Eigen::Matrix2cd::Identity();
        p[1] << 0.0, 1.0, 1.0, 0.0;
        p[2] << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
        p[3] << 1.0, 0.0, 0.0, -1.0;
        return p;
    }();
    return paulis;
}

// chi <-> Pauli-transfer-matrix conversion tensor
// A[(i,j),(m,n)] = Tr(P_i P_m P_j P_n)/2.
const Eigen::MatrixXcd& ptm_from_chi_tensor() {
    static const Eigen::MatrixXcd tensor = [] {
        const auto& p = pauli_basis();
        Eigen::MatrixXcd a(16, 16);
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                for (int m = 0; m < 4; ++m) {
                    for (int n = 0; n < 4; ++n) {
                        a(i * 4 + j, m * 4 + n) = 0.5 * (p[i] * p[m] * p[j] * p[n]).trace();
                    }
                }
            }
        }
        return a;
    }();
    return tensor;
}

} // namespace

Eigen::Matrix4cd identity_chi() {
    Eigen::Matrix4cd chi = Eigen::Matrix4cd::Zero();
    chi(0, 0) = 1.0;
    return chi;
}

double fidelity_process(const Eigen::Matrix4cd& chi_a, const Eigen::Matrix4cd& chi_b) {
    return (chi_a * chi_b).trace().real();
}

Eigen::Matrix4cd chi_from_bloch_pairs(const std::vector<Eigen::Vector3d>& inputs,
                                      const std::vector<Eigen::Vector3d>& outputs,
                                      double* min_eigenvalue_before) {
    if (inputs.size() != outputs.size() || inputs.size() < 4) {
        throw ValidationError("chi_from_bloch_pairs: need >= 4 paired Bloch vectors");
    }
    // Affine least squares s_out = M r_in + c.
    const int n = static_cast<int>(inputs.size());
    Eigen::MatrixXd design(n, 4);
    for (int k = 0; k < n; ++k) {
        design.row(k) << inputs[k].transpose(), 1.0;
    }
    Eigen::Matrix3d m;
    Eigen::Vector3d c;
    for (int comp = 0; comp < 3; ++comp) {
        Eigen::VectorXd rhs(n);
        for (int k = 0; k < n; ++k) rhs(k) = outputs[k](comp);
        const Eigen::Vector4d beta = design.colPivHouseholderQr().solve(rhs);
        m.row(comp) = beta.head<3>().transpose();
        c(comp) = beta(3);
    }

    Eigen::Matrix4d ptm = Eigen::Matrix4d::Zero();
    ptm(0, 0) = 1.0;
    ptm.block<3, 1>(1, 0) = c;
    ptm.block<3, 3>(1, 1) = m;

    const Eigen::MatrixXcd& tensor = ptm_from_chi_tensor();
    Eigen::VectorXcd r_vec(16);
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) r_vec(i * 4 + j) = ptm(i, j);
    }
    const Eigen::VectorXcd chi_vec = tensor.colPivHouseholderQr().solve(r_vec);
    Eigen::Matrix4cd chi;
    for (int mi = 0; mi < 4; ++mi) {
        for (int ni = 0; ni < 4; ++ni) chi(mi, ni) = chi_vec(mi * 4 + ni);
    }
    chi = (chi + chi.adjoint().eval()) / 2.0;

    // Nearest-PSD (Frobenius) projection, then unit trace.
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(chi);
    if (min_eigenvalue_before) *min_eigenvalue_before = es.eigenvalues().minCoeff();
    Eigen::Vector4d clipped = es.eigenvalues().cwiseMax(0.0);
    if (clipped.sum() <= 0.0) throw NumericalError("chi_from_bloch_pairs: zero channel");
    chi = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().adjoint();
    chi /= chi.trace().real();
    return chi;
}

namespace {

struct CardinalState {
    Eigen::Vector2cd qubit;
    Eigen::Vector3d bloch;
};

const std::array<CardinalState, 6>& cardinal_states() {
    static const std::array<CardinalState, 6> states = [] {
        const double s = 1.0 / std::sqrt(2.0);
        std::array<CardinalState, 6> out;
        out[0] = {{Complex(1, 0), Complex(0, 0)}, {0, 0, 1}};   // |g>
        out[1] = {{Complex(0, 0), Complex(1, 0)}, {0, 0, -1}};  // |e>
        out[2] = {{Complex(s, 0), Complex(s, 0)}, {1, 0, 0}};   // |+>
        out[3] = {{Complex(s, 0), Complex(-s, 0)}, {-1, 0, 0}}; // |->
        out[4] = {{Complex(s, 0), Complex(0, s)}, {0, 1, 0}};   // |+i>
        out[5] = {{Complex(s, 0), Complex(0, -s)}, {0, -1, 0}}; // |-i>
        return out;
    }();
    return states;
}

// Tomography basis rotations sending the +1 eigenstate of the measured axis
// to |e>, so P(e) after the rotation reads the Bloch component directly.
const std::array<Eigen::Matrix2cd, 3>& tomography_rotations() {
    static const std::array<Eigen::Matrix2cd, 3> rots = [] {
        const double s = 1.0 / std::sqrt(2.0);
        std::array<Eigen::Matrix2cd, 3> r;
        // x: |+> -> |e>, |-> -> |g>
        r[0] << s, -s, s, s;
        // y: |+i> -> |e>, |-i> -> |g>
        r[1] << s, Complex(0, s), s, Complex(0, -s);
        r[2] = Eigen::Matrix2cd::Identity();
        return r;
    }();
    return rots;
}

double measured_excited_probability(double p_excited, const SystemParams& params,
                                    bool apply_errors, bool unfold) {
    if (!apply_errors) return p_excited;
    const double meas = (1.0 - params.readout_error_e) * p_excited +
                        params.readout_error_g * (1.0 - p_excited);
    if (!unfold) return meas;
    const double denom = 1.0 - params.readout_error_g - params.readout_error_e;
    return (meas - params.readout_error_g) / denom;
}

Eigen::Vector3d bloch_from_qubit_rho(const Eigen::Matrix2cd& rho_q, const SystemParams& params,
                                     const ProcessBenchmarkOptions& opts) {
    const auto& rots = tomography_rotations();
    Eigen::Vector3d bloch;
    for (int axis = 0; axis < 3; ++axis) {
        const Eigen::Matrix2cd rotated = rots[axis] * rho_q * rots[axis].adjoint();
        const double pe = measured_excited_probability(rotated(1, 1).real(), params,
                                                       opts.apply_readout_errors,
                                                       opts.unfold_readout);
        // After each rotation, P(e) encodes the +1 eigenstate of the measured
        // axis for x/y; for z the ground state is the +1 eigenstate.
        bloch(axis) = (axis == 2) ? (1.0 - 2.0 * pe) : (2.0 * pe - 1.0);
    }
    return bloch;
}

struct RoundFit {
    double amplitude = 0.75;
    double base = 1.0;
};

RoundFit fit_round_decay(const std::vector<int>& rounds, const std::vector<double>& fidelity,
                         double floor) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < rounds.size(); ++i) {
        if (fidelity[i] - floor > 1e-9) {
            xs.push_back(static_cast<double>(rounds[i]));
            ys.push_back(std::log(fidelity[i] - floor));
        }
    }
    RoundFit fit;
    if (xs.size() >= 2) {
        const LinearFit lf = linear_fit(xs, ys);
        fit.amplitude = std::exp(lf.intercept);
        fit.base = std::exp(lf.slope);
    } else if (xs.size() == 1) {
        fit.amplitude = std::exp(ys[0]);
        fit.base = 1.0;
    }
    return fit;
}

} // namespace

std::vector<ProcessResult> process_benchmark(const ControlPulse& encode,
                                             const ControlPulse& decode,
                                             const std::vector<int>& rounds_list,
                                             const SystemParams& system,
                                             const HilbertConfig& config,
                                             const ProcessBenchmarkOptions& options) {
    system.validate();
    config.validate();
    if (rounds_list.empty()) throw ValidationError("process_benchmark: empty rounds list");
    if (std::abs(encode.dt - decode.dt) > 1e-18) {
        throw ValidationError("process_benchmark: encode/decode pulse grids differ");
    }
    for (const int k : rounds_list) {
        if (k < 0) throw ValidationError("process_benchmark: negative round count");
    }

    const ControlPulse enc = apply_link(encode, options.link, options.recalibrate_link);
    const ControlPulse dec = apply_link(decode, options.link, options.recalibrate_link);
    const int max_round = *std::max_element(rounds_list.begin(), rounds_list.end());

    const Operator h0 = drift_hamiltonian(system, FrameSpec::resonant(system), config);
    const DriveOperators drives = drive_hamiltonians(config);
    const auto collapse = collapse_operators(system, config);

    // Snapshot the qubit reduced state of every cardinal input at every round.
    const auto& cardinals = cardinal_states();
    std::vector<std::vector<Eigen::Matrix2cd>> qubit_rho(
        cardinals.size(), std::vector<Eigen::Matrix2cd>(max_round + 1));

    parallel_for(static_cast<int>(cardinals.size()), options.threads, [&](int input) {
        Vector full = Vector::Zero(config.total_dim());
        for (int q = 0; q < 2; ++q) full(config.index(q, 0)) = cardinals[input].qubit(q);
        if (options.decoherence) {
            DensityMatrix rho = pure_density(QuantumState(full, config));
            qubit_rho[input][0] = partial_trace_cavity(rho.matrix, config);
            for (int round = 1; round <= max_round; ++round) {
                auto res = propagate_lindblad(h0, drives, enc, rho, collapse);
                rho = *res.final_density;
                res = propagate_lindblad(h0, drives, dec, rho, collapse);
                rho = *res.final_density;
                qubit_rho[input][round] = partial_trace_cavity(rho.matrix, config);
            }
        } else {
            QuantumState psi(full, config);
            qubit_rho[input][0] = partial_trace_cavity(pure_density(psi).matrix, config);
            for (int round = 1; round <= max_round; ++round) {
                auto res = propagate_unitary(h0, drives, enc, psi);
                psi = *res.final_state;
                res = propagate_unitary(h0, drives, dec, psi);
                psi = *res.final_state;
                qubit_rho[input][round] = partial_trace_cavity(pure_density(psi).matrix, config);
            }
        }
    });

    std::vector<ProcessResult> results;
    std::vector<double> fidelities;
    for (const int k : rounds_list) {
        std::vector<Eigen::Vector3d> in_bloch, out_bloch;
        for (std::size_t input = 0; input < cardinals.size(); ++input) {
            in_bloch.push_back(cardinals[input].bloch);
            out_bloch.push_back(bloch_from_qubit_rho(qubit_rho[input][k], system, options));
        }
        ProcessResult r;
        r.rounds = k;
        r.process_matrix = chi_from_bloch_pairs(in_bloch, out_bloch, &r.chi_min_eigenvalue);
        r.process_fidelity = fidelity_process(identity_chi(), r.process_matrix);
        r.decoherence = options.decoherence;
        r.length_km = options.link.length_km;
        fidelities.push_back(r.process_fidelity);
        results.push_back(std::move(r));
    }

    const RoundFit fit = fit_round_decay(rounds_list, fidelities, options.fit_floor);
    const double f1 = fit.amplitude * fit.base + options.fit_floor;
    for (auto& r : results) r.fitted_single_round_fidelity = f1;
    return results;
}

std::string process_results_csv(const std::vector<ProcessResult>& results) {
    std::ostringstream out;
    out << "rounds,process_fidelity,fitted_F1,decoherence_flag,length_km\n";
    for (const auto& r : results) {
        out << r.rounds << "," << format_double(r.process_fidelity) << ","
            << format_double(r.fitted_single_round_fidelity) << ","
            << (r.decoherence ? 1 : 0) << "," << format_double(r.length_km) << "\n";
    }
    return out.str();
}

} // namespace boslink
