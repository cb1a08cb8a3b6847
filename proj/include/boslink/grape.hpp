// grape.hpp — Gradient Ascent Pulse Engineering for state transfers and
// qubit-to-cavity encode/decode isometries on the joint qubit-cavity space.
//
// The objective is the phase-coherent isometry fidelity
//     F = | (1/d) sum_k <target_k| U(pulse) |initial_k> |^2
// minus optional amplitude and first-difference smoothness penalties.
// Keeping the sum inside the modulus pins the relative phase between the
// logical branches, which is what superposition-state preparation needs.
// Gradients are exact: each segment propagator is differentiated through
// its Hermitian eigendecomposition.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "boslink/model.hpp"
#include "boslink/propagate.hpp"

namespace boslink {

struct GrapePenalties {
    double amplitude_weight = 0.0;  // quadratic in u/amp_max, averaged over segments
    double derivative_weight = 0.0; // quadratic in first differences of u/amp_max
};

enum class StepRule {
    LineSearch, // plain gradient ascent with backtracking; reference rule
    Momentum,   // heavy-ball with reset on decrease; no monotonicity promise
    Lbfgs,      // limited-memory quasi-Newton, Armijo-accepted (monotone)
};

struct GrapeOptions {
    int max_iters = 500;
    double gradient_tolerance = 1e-9; // on the normalized-control gradient 2-norm
    double target_fidelity = 0.0;     // stop early once reached (0 disables)
    StepRule step_rule = StepRule::LineSearch;
    double initial_step = 0.1;
    double step_grow = 1.6;
    double step_shrink = 0.5;
    double armijo_c = 1e-4;
    double momentum_beta = 0.9;
    int lbfgs_memory = 10;
    double init_scale = 0.01; // initial pulse amplitude, fraction of amp_max
    std::uint64_t seed = 1;
    int threads = 1;
};

struct GrapeProblem {
    std::vector<QuantumState> initial_states; // mutually orthonormal, d in {1, 2}
    std::vector<QuantumState> target_states;  // same length and orthonormality
    Operator h0;
    DriveOperators drives;
    HilbertConfig config;
    double duration = 2e-6;
    double dt = 2e-9;
    double amp_max = kTwoPi * 5e6;
    GrapePenalties penalties;
    GrapeOptions options;

    int n_segments() const { return static_cast<int>(std::lround(duration / dt)); }
    void validate() const;
};

struct ObjectiveParts {
    double fidelity = 0.0;
    double amplitude_penalty = 0.0;
    double derivative_penalty = 0.0;
    double value() const { return fidelity - amplitude_penalty - derivative_penalty; }
};

struct GrapeIterate {
    int iteration = 0;
    double fidelity = 0.0;
    double penalty = 0.0;
    double objective = 0.0;
    double grad_norm = 0.0;
};

struct GrapeResult {
    ControlPulse pulse;
    std::vector<GrapeIterate> history; // accepted iterates, objective non-decreasing
    double final_fidelity = 0.0;
    double final_objective = 0.0;
    bool converged = false;
    int iterations = 0;
    std::string stop_reason;

    std::string history_csv() const; // iter, fidelity, grad_norm, penalty
};

// Penalized objective F - penalties; the parts variant reports them separately.
double objective(const GrapeProblem& problem, const ControlPulse& pulse);
ObjectiveParts objective_parts(const GrapeProblem& problem, const ControlPulse& pulse);

// d(objective)/du, one row per segment, columns (qubit_I, qubit_Q, cavity_I,
// cavity_Q); u in rad/s. Matches central finite differences to 1e-5 relative.
Eigen::MatrixXd gradient(const GrapeProblem& problem, const ControlPulse& pulse);

// Gradient ascent with the selected step rule, amplitude box projection, and
// seeded random initialization. Non-convergence is reported via the flag.
GrapeResult optimize(const GrapeProblem& problem);
GrapeResult optimize(const GrapeProblem& problem, const ControlPulse& initial_pulse);

// --- problem builders ----------------------------------------------------------

enum class EncodeBasis {
    Fock,     // {|0>, |n>}
    Binomial, // {(|0>+|4>)/sqrt(2), |2>}
};

struct EncodeSpec {
    EncodeBasis basis = EncodeBasis::Fock;
    int n = 1; // Fock target photon number; ignored for Binomial

    int max_photon() const { return basis == EncodeBasis::Binomial ? 4 : n; }
    std::string name() const;
};

// d=2 isometry {|g,0>, |e,0>} -> {|g>⊗c0, |g>⊗c1}; the qubit is returned
// to |g> so the encoded cavity is disentangled.
GrapeProblem make_encode_problem(const EncodeSpec& spec, const SystemParams& params,
                                 const HilbertConfig& config, double duration,
                                 double dt = 2e-9);
// Same with initial/target lists swapped.
GrapeProblem make_decode_problem(const EncodeSpec& spec, const SystemParams& params,
                                 const HilbertConfig& config, double duration,
                                 double dt = 2e-9);
// d=1 state preparation |g,0> -> |g>⊗(cavity amplitudes).
GrapeProblem make_state_prep_problem(const Vector& cavity_target, const SystemParams& params,
                                     const HilbertConfig& config, double duration,
                                     double dt = 2e-9);

// Logical cavity states for an encode spec: {c0, c1} as cavity_dim vectors.
std::pair<Vector, Vector> encode_basis_states(const EncodeSpec& spec,
                                              const HilbertConfig& config);

} // namespace boslink
