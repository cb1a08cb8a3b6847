// propagate.hpp — piecewise-constant time evolution: closed-system
// propagators built from per-segment Hermitian eigendecompositions, and a
// fixed-step RK4 Lindblad integrator for open-system runs.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "boslink/hilbert.hpp"
#include "boslink/model.hpp"

namespace boslink {

// Piecewise-constant drive envelopes on the four quadrature channels
// (qubit I/Q, cavity I/Q), amplitudes in rad/s at the device.
struct ControlPulse {
    double dt = 2e-9;         // seconds per segment
    double t0 = 0.0;          // start-time offset (link delay bookkeeping)
    Eigen::MatrixXd segments; // n_segments x 4

    static constexpr int kChannels = 4;

    ControlPulse() = default;
    ControlPulse(double segment_dt, Eigen::MatrixXd segment_amplitudes, double start_offset = 0.0);

    int n_segments() const { return static_cast<int>(segments.rows()); }
    double total_duration() const { return dt * n_segments(); }

    // Zero pulse of the given length. A zero-segment pulse is the identity.
    static ControlPulse zero(double segment_dt, int n_segments);

    // Largest |qubit_I + i qubit_Q| and |cavity_I + i cavity_Q| over segments.
    double max_channel_magnitude() const;

    void validate(double amp_max = 0.0) const; // amp_max 0 disables the bound check

    // CSV with columns t_ns, qubit_I, qubit_Q, cavity_I, cavity_Q
    // (amplitudes in MHz x 2pi).
    std::string to_csv() const;
    static ControlPulse from_csv(const std::string& csv_text);
};

struct PropagateOptions {
    bool cache_propagators = false;
    int snapshot_stride = 0;       // unitary path: record the state every N segments
    double leakage_threshold = 1e-4;
    int substeps = 4;              // Lindblad RK4 substeps per segment (h = dt/substeps)
};

struct PropagationResult {
    std::optional<QuantumState> final_state;
    std::optional<DensityMatrix> final_density;
    std::vector<Matrix> propagators; // per segment, when requested
    std::vector<Vector> snapshots;   // when requested
    double leakage_final = 0.0;
    double leakage_max = 0.0;
    bool truncation_warning = false;
    double trace_error = 0.0;        // Lindblad path: |Tr rho - 1| at the end
};

// Population in the top two Fock levels, summed over both qubit branches.
double leakage_metric(const QuantumState& psi);
double leakage_metric(const DensityMatrix& rho);

// psi_final = prod_k exp(-i (H0 + sum_j u_jk Hj) dt) psi0, later segments
// applied leftmost. Norm is preserved to 1e-9 over thousands of segments.
PropagationResult propagate_unitary(const Operator& h0, const DriveOperators& drives,
                                    const ControlPulse& pulse, const QuantumState& psi0,
                                    const PropagateOptions& options = {});

// d rho/dt = -i[H(t), rho] + sum_c (c rho c† - {c†c, rho}/2), RK4 at
// h = dt/substeps. Throws NumericalError if the trace drifts past 1e-6.
PropagationResult propagate_lindblad(const Operator& h0, const DriveOperators& drives,
                                     const ControlPulse& pulse, const DensityMatrix& rho0,
                                     const std::vector<Operator>& collapse,
                                     const PropagateOptions& options = {});

} // namespace boslink
