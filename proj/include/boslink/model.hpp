// model.hpp — drift Hamiltonian of the dispersively coupled transmon/cavity
// system in the doubly rotating frame, quadrature drive operators, and
// Lindblad collapse operators.
//
// All angular frequencies are rad/s internally; the config-file dialect
// carries GHz/MHz/kHz/µs keys and converts on load. The readout resonator
// mode is not propagated: its frequency and cross-Kerr are stored, and
// readout acts as a classical assignment channel parametrized by
// readout_error_g / readout_error_e.

#pragma once

#include <string>
#include <vector>

#include "boslink/config.hpp"
#include "boslink/hilbert.hpp"

namespace boslink {

struct SystemParams {
    // Mode frequencies (rad/s). Measured device values.
    double omega_q = kTwoPi * 4.257e9;
    double omega_s = kTwoPi * 5.922e9;
    double omega_r = kTwoPi * 7.508e9;
    // Cross-Kerr and self-Kerr rates (rad/s).
    double chi_sq = kTwoPi * 0.417e6;
    double chi_rq = kTwoPi * 1.20e6; // stored only; readout mode not propagated
    double kerr_g = kTwoPi * 1.32e3;
    // Coherence times (s). Not reported by the experiment; ASSUMED defaults.
    double t1_qubit = 30e-6;
    double t2_qubit = 20e-6;
    double t1_cavity = 500e-6;
    // Assignment-channel errors: P(read e | g) and P(read g | e). ASSUMED.
    double readout_error_g = 0.02;
    double readout_error_e = 0.02;

    void validate() const;

    // Keys whose defaults are not taken from the measured device table.
    static const char* assumed_keys();
};

// Rotating-frame reference frequencies; defaults equal the qubit and cavity
// frequencies (doubly rotating, fully resonant frame).
struct FrameSpec {
    double qubit_frame;
    double cavity_frame;

    FrameSpec(double qubit, double cavity) : qubit_frame(qubit), cavity_frame(cavity) {}
    static FrameSpec resonant(const SystemParams& p) { return FrameSpec(p.omega_q, p.omega_s); }
};

// The four quadrature drive operators on the composite space, under the
// rotating-wave approximation:
//   qubit:  (sigma_x ⊗ I)/2, (sigma_y ⊗ I)/2
//   cavity: I ⊗ (a + a†)/2,  I ⊗ i(a - a†)/2
struct DriveOperators {
    Operator qubit_i;
    Operator qubit_q;
    Operator cavity_i;
    Operator cavity_q;

    const Operator& channel(int j) const {
        switch (j) {
            case 0: return qubit_i;
            case 1: return qubit_q;
            case 2: return cavity_i;
            default: return cavity_q;
        }
    }
};

// H0/hbar = dq |e><e|⊗I + ds I⊗a†a - chi_sq |e><e|⊗a†a - (K_g/2) I⊗a†a†aa,
// with detunings dq = omega_q - frame.qubit, ds = omega_s - frame.cavity.
// Diagonal in the fixed basis.
Operator drift_hamiltonian(const SystemParams& params, const FrameSpec& frame,
                           const HilbertConfig& config);

DriveOperators drive_hamiltonians(const HilbertConfig& config);

// sqrt(1/T1q) sigma_minus⊗I, sqrt(1/(2*Tphi)) sigma_z⊗I with
// 1/Tphi = 1/T2 - 1/(2*T1), sqrt(1/T1c) I⊗a. Zero-rate operators are
// dropped from the list.
std::vector<Operator> collapse_operators(const SystemParams& params, const HilbertConfig& config);

// Config I/O in the shared dialect ([system], [decoherence], [readout]).
SystemParams system_params_from_config(const Config& cfg);
void system_params_to_config(const SystemParams& params, Config& cfg);

} // namespace boslink
