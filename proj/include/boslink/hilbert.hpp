// hilbert.hpp — truncated Fock-space linear algebra for the composite
// qubit ⊗ cavity system.
//
// Basis ordering is qubit-major and fixed everywhere: composite index
// i = q * cavity_dim + n for qubit level q in {0 = g, 1 = e} and cavity
// Fock level n. All types are value-semantic and immutable after
// construction; the free functions are pure and thread-safe.

#pragma once

#include <complex>
#include <string>

#include <Eigen/Dense>

#include "boslink/errors.hpp"

namespace boslink {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

struct HilbertConfig {
    int cavity_dim = 0; // Fock truncation N
    int qubit_dim = 2;

    HilbertConfig() = default;
    explicit HilbertConfig(int cavity_dimension) : cavity_dim(cavity_dimension) { validate(); }

    int total_dim() const { return qubit_dim * cavity_dim; }

    void validate() const {
        if (qubit_dim != 2) throw ValidationError("HilbertConfig: qubit_dim must be 2");
        if (cavity_dim < 2) throw ValidationError("HilbertConfig: cavity_dim must be >= 2");
    }

    // Truncation guard band: states with up to `max_photon` photons need
    // six spare Fock levels above them, plus headroom for drive excursions.
    static HilbertConfig for_max_photon(int max_photon) {
        return HilbertConfig(max_photon + 8);
    }

    bool operator==(const HilbertConfig& other) const {
        return cavity_dim == other.cavity_dim && qubit_dim == other.qubit_dim;
    }

    int index(int qubit_level, int fock_level) const {
        return qubit_level * cavity_dim + fock_level;
    }
};

// Pure state on the composite space. Normalized constructors keep
// ||amplitudes|| = 1 to 1e-12.
struct QuantumState {
    Vector amplitudes;
    HilbertConfig config;

    QuantumState() = default;
    QuantumState(Vector amps, HilbertConfig cfg);

    Complex amplitude(int qubit_level, int fock_level) const {
        return amplitudes(config.index(qubit_level, fock_level));
    }
    double norm() const { return amplitudes.norm(); }
};

struct DensityMatrix {
    Matrix matrix;
    HilbertConfig config;

    DensityMatrix() = default;
    DensityMatrix(Matrix m, HilbertConfig cfg);

    double trace_real() const { return matrix.trace().real(); }
};

// Square operator, either on the composite space (total_dim) or on a single
// mode (cavity_dim or qubit_dim); dim() disambiguates.
struct Operator {
    Matrix matrix;
    HilbertConfig config;

    Operator() = default;
    Operator(Matrix m, HilbertConfig cfg);

    int dim() const { return static_cast<int>(matrix.rows()); }
    bool is_composite() const { return dim() == config.total_dim(); }

    Operator adjoint() const { return Operator(matrix.adjoint(), config); }
};

// --- state constructors -----------------------------------------------------

// |q> ⊗ |n>
QuantumState basis_state(const HilbertConfig& config, int qubit_level, int fock_level);
// |g> ⊗ (coefficients over Fock levels), normalized
QuantumState cavity_state(const HilbertConfig& config, const Vector& cavity_amplitudes,
                          int qubit_level = 0);
DensityMatrix pure_density(const QuantumState& psi);

// --- elementary operators ----------------------------------------------------

// Cavity lowering operator, <n-1|a|n> = sqrt(n). Single-mode (cavity_dim).
Operator annihilation(const HilbertConfig& config);
// Cavity number operator a†a. Single-mode.
Operator number_operator(const HilbertConfig& config);
// Photon-number parity (-1)^n. Single-mode.
Operator parity_operator(const HilbertConfig& config);
// 2x2 qubit operators.
Operator qubit_identity(const HilbertConfig& config);
Operator sigma_x(const HilbertConfig& config);
Operator sigma_y(const HilbertConfig& config);
Operator sigma_z(const HilbertConfig& config);
Operator sigma_minus(const HilbertConfig& config); // |g><e|
Operator sigma_plus(const HilbertConfig& config);  // |e><g|
Operator cavity_identity(const HilbertConfig& config);
Operator composite_identity(const HilbertConfig& config);

// Kronecker product qubit_op ⊗ cavity_op in the fixed basis ordering.
Operator tensor(const Operator& qubit_op, const Operator& cavity_op);

// D(alpha) = exp(alpha a† - alpha* a) on the cavity space.
// Precondition |alpha|^2 <= cavity_dim - 6 (truncation guard).
Operator displacement(Complex alpha, const HilbertConfig& config);

// exp(scale * op). Hermitian and anti-Hermitian arguments go through an
// eigendecomposition (unitary to 1e-10 for anti-Hermitian results); general
// matrices use scaling-and-squaring with a Padé approximant.
Operator expm(const Operator& op, Complex scale = Complex(1.0, 0.0));

// Raw-matrix variants used by the propagation kernels.
Matrix expm_matrix(const Matrix& m, Complex scale = Complex(1.0, 0.0));
// exp(-i * H * dt) for Hermitian H via SelfAdjointEigenSolver.
Matrix expm_hermitian_propagator(const Matrix& hamiltonian, double dt);

// --- fidelities and reductions ----------------------------------------------

// Uhlmann fidelity of two raw density matrices of equal dimension.
double fidelity_matrices(const Matrix& rho, const Matrix& sigma);

// |<a|b>|^2 for pure states.
double fidelity_state(const QuantumState& a, const QuantumState& b);
// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
double fidelity_state(const DensityMatrix& a, const DensityMatrix& b);
double fidelity_state(const QuantumState& a, const DensityMatrix& b);
double fidelity_state(const DensityMatrix& a, const QuantumState& b);

// Partial traces with the fixed qubit-major ordering.
Matrix partial_trace_cavity(const Matrix& rho, const HilbertConfig& config); // -> 2x2
Matrix partial_trace_qubit(const Matrix& rho, const HilbertConfig& config);  // -> N x N

// --- serialization ------------------------------------------------------------

// {rows, cols, re: row-major, im: row-major}
std::string matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const std::string& json_text);

} // namespace boslink
