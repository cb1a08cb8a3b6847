// tomography.hpp — measurement and reconstruction: photon-number readout,
// Wigner maps via displaced parity, RrhoR maximum-likelihood state
// reconstruction, and qubit process matrices from repeated encode/decode
// rounds.
//
// Wigner convention: W(alpha) = (2/pi) Tr[rho_cav D(alpha) P D(-alpha)], so
// the vacuum peaks at 2/pi. Displaced-parity matrix elements are evaluated
// in an enlarged Fock workspace so truncation error stays below the stated
// tolerances even for high-photon states at the edge of the guard band.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "boslink/grape.hpp"
#include "boslink/hilbert.hpp"
#include "boslink/model.hpp"
#include "boslink/optlink.hpp"
#include "boslink/propagate.hpp"

namespace boslink {

inline constexpr double kWignerConvention = 2.0 / 3.14159265358979323846;

// --- Wigner maps ---------------------------------------------------------------

struct WignerGrid {
    double extent = 2.0; // alpha spans [-extent, extent] on both axes
    int points = 81;     // per axis; odd keeps the origin on the grid

    double step() const { return points > 1 ? 2.0 * extent / (points - 1) : 0.0; }
    Complex alpha(int re_index, int im_index) const {
        return Complex(-extent + re_index * step(), -extent + im_index * step());
    }
};

struct WignerMap {
    WignerGrid grid;
    Eigen::MatrixXd values; // values(im_index, re_index)

    double at(int re_index, int im_index) const { return values(im_index, re_index); }
    // Riemann-sum normalization integral of W over the grid.
    double integral() const;
    // Sign changes of W along the positive real axis from the origin outward.
    int radial_sign_changes() const;
    std::string to_csv() const; // re_alpha, im_alpha, W
};

// Displaced-parity kernel (D(alpha) P D(-alpha)) restricted to dim x dim,
// computed in a zero-padded workspace for truncation accuracy.
Matrix displaced_parity_elements(Complex alpha, int dim);

// Single Wigner value of a cavity density matrix.
double wigner_point(const Matrix& rho_cavity, Complex alpha);

// Grid map of the cavity reduced state. Grid extent must respect the
// truncation guard: extent^2 <= cavity_dim - 6.
WignerMap wigner(const DensityMatrix& state, const WignerGrid& grid, int threads = 1);
WignerMap wigner(const QuantumState& state, const WignerGrid& grid, int threads = 1);
WignerMap wigner_cavity(const Matrix& rho_cavity, const HilbertConfig& config,
                        const WignerGrid& grid, int threads = 1);

// Max |W(rotated alpha) - W(alpha)| when the sampling grid is rotated by
// 2 pi / fold; n-fold symmetric states give ~0.
double wigner_rotation_asymmetry(const Matrix& rho_cavity, const HilbertConfig& config,
                                 const WignerGrid& grid, int fold, int threads = 1);

// --- photon-number distributions -------------------------------------------------

enum class PhotonMeasurementMode { Ideal, SelectivePulse };

struct PhotonDistribution {
    Eigen::VectorXd probabilities; // length cavity_dim, sums to 1
    PhotonMeasurementMode provenance = PhotonMeasurementMode::Ideal;
    long long shots = 0; // 0 = exact probabilities

    double mean() const;
    // Max pointwise deviation from a Poisson distribution with the same mean.
    double poisson_deviation() const;
};

struct SelectivePulseOptions {
    double sigma = 1e-6;  // Gaussian width; bandwidth must stay well below chi
    double dt = 4e-9;
    bool unfold_readout = true;
};

// Ideal mode projects on Fock states. Selective mode simulates a
// photon-number-selective Gaussian pi-pulse at detuning -n*chi_sq per Fock
// level, applies the readout assignment channel, optionally unfolds it, and
// normalizes. shots > 0 draws per-level binomial counts (seeded).
PhotonDistribution photon_distribution(const DensityMatrix& state, PhotonMeasurementMode mode,
                                       const SystemParams& params, long long shots = 0,
                                       std::uint64_t seed = 1,
                                       const SelectivePulseOptions& options = {});
PhotonDistribution photon_distribution(const QuantumState& state, PhotonMeasurementMode mode,
                                       const SystemParams& params, long long shots = 0,
                                       std::uint64_t seed = 1,
                                       const SelectivePulseOptions& options = {});

// --- maximum-likelihood state reconstruction -------------------------------------

// One tomography setting at displacement alpha: either a mean displaced
// parity or a displaced photon-number distribution.
struct TomographyRecord {
    Complex alpha;
    double weight = 1.0;
    std::optional<double> parity;          // <(-1)^n> after D(-alpha)
    std::optional<Eigen::VectorXd> counts; // P(n) after D(-alpha)
};

struct MleOptions {
    int max_iters = 5000;
    double loglik_tolerance = 1e-10;
    int dim = 0; // reconstruction dimension; 0 uses cavity_dim
};

struct MleResult {
    Matrix rho; // dim x dim cavity-space estimate
    std::vector<double> loglik_history;
    bool converged = false;
    bool rank_warning = false; // fewer than dim^2 settings
    int iterations = 0;
};

// Iterative RrhoR fixed point with dilution fallback; the log-likelihood is
// non-decreasing iteration to iteration.
MleResult mle_reconstruct(const std::vector<TomographyRecord>& records,
                          const HilbertConfig& config, const MleOptions& options = {});

// Noiseless parity records for a known cavity state on a square grid
// (test/data generation helper).
std::vector<TomographyRecord> parity_records_from_state(const Matrix& rho_cavity,
                                                        const WignerGrid& grid);

// --- qubit process tomography over encode/decode rounds ---------------------------

struct ProcessResult {
    int rounds = 0;
    Eigen::Matrix4cd process_matrix; // chi in the Pauli basis {I, X, Y, Z}
    double process_fidelity = 1.0;
    double fitted_single_round_fidelity = 1.0;
    bool decoherence = false;
    double length_km = 0.0;
    double chi_min_eigenvalue = 0.0; // before PSD projection; flags non-physical output
};

struct ProcessBenchmarkOptions {
    bool decoherence = true;
    LinkParams link;
    bool recalibrate_link = true;
    bool apply_readout_errors = true;
    bool unfold_readout = true;
    double fit_floor = 0.25; // depolarized floor c in F(k) = A p^k + c
    int threads = 1;
};

// Prepares the 6 cardinal qubit states, applies (decode ∘ encode)^k through
// the link, reconstructs the qubit chi-matrix per round count by linear
// inversion with nearest-PSD projection, and fits the round decay.
std::vector<ProcessResult> process_benchmark(const ControlPulse& encode,
                                             const ControlPulse& decode,
                                             const std::vector<int>& rounds_list,
                                             const SystemParams& system,
                                             const HilbertConfig& config,
                                             const ProcessBenchmarkOptions& options = {});

// Tr(chi_a chi_b); equals the process fidelity when one argument is pure.
double fidelity_process(const Eigen::Matrix4cd& chi_a, const Eigen::Matrix4cd& chi_b);

// chi matrix of the identity channel (chi_II = 1).
Eigen::Matrix4cd identity_chi();

// Linear inversion + PSD projection from (input Bloch, output Bloch) pairs;
// exposed for tests.
Eigen::Matrix4cd chi_from_bloch_pairs(const std::vector<Eigen::Vector3d>& inputs,
                                      const std::vector<Eigen::Vector3d>& outputs,
                                      double* min_eigenvalue_before = nullptr);

std::string process_results_csv(const std::vector<ProcessResult>& results);

} // namespace boslink
