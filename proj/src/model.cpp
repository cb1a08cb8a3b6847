#include "boslink/model.hpp"

#include <cmath>

namespace boslink {

void SystemParams::validate() const {
    if (omega_q <= 0 || omega_s <= 0 || omega_r <= 0) {
        throw ValidationError("SystemParams: mode frequencies must be positive");
    }
    if (chi_sq < 0 || chi_rq < 0 || kerr_g < 0) {
        throw ValidationError("SystemParams: Kerr rates must be non-negative");
    }
    if (t1_qubit <= 0 || t2_qubit <= 0 || t1_cavity <= 0) {
        throw ValidationError("SystemParams: coherence times must be positive");
    }
    if (t2_qubit > 2.0 * t1_qubit * (1.0 + 1e-12)) {
        throw ValidationError("SystemParams: t2_qubit must satisfy t2 <= 2*t1");
    }
    if (readout_error_g < 0 || readout_error_g >= 0.5 || readout_error_e < 0 ||
        readout_error_e >= 0.5) {
        throw ValidationError("SystemParams: readout errors must lie in [0, 0.5)");
    }
}

const char* SystemParams::assumed_keys() {
    return "t1_qubit,t2_qubit,t1_cavity,readout_error_g,readout_error_e";
}

Operator drift_hamiltonian(const SystemParams& params, const FrameSpec& frame,
                           const HilbertConfig& config) {
    params.validate();
    config.validate();
    const double dq = params.omega_q - frame.qubit_frame;
    const double ds = params.omega_s - frame.cavity_frame;
    const int n = config.cavity_dim;
    Matrix h = Matrix::Zero(config.total_dim(), config.total_dim());
    for (int q = 0; q < 2; ++q) {
        for (int k = 0; k < n; ++k) {
            double e = dq * q + ds * k;
            e -= params.chi_sq * q * k;                    // -chi_sq |e><e| a†a
            e -= 0.5 * params.kerr_g * k * (k - 1.0);      // -(K_g/2) a†a†aa
            h(config.index(q, k), config.index(q, k)) = e;
        }
    }
    return Operator(std::move(h), config);
}

DriveOperators drive_hamiltonians(const HilbertConfig& config) {
    config.validate();
    const Operator iq = qubit_identity(config);
    const Operator ic = cavity_identity(config);
    const Matrix a = annihilation(config).matrix;

    Operator hqx = tensor(sigma_x(config), ic);
    hqx.matrix *= 0.5;
    Operator hqy = tensor(sigma_y(config), ic);
    hqy.matrix *= 0.5;

    Operator hcx = tensor(iq, Operator((a + Matrix(a.adjoint())) * 0.5, config));
    Operator hcy = tensor(iq, Operator(Complex(0.0, 0.5) * (a - Matrix(a.adjoint())), config));
    return DriveOperators{std::move(hqx), std::move(hqy), std::move(hcx), std::move(hcy)};
}

std::vector<Operator> collapse_operators(const SystemParams& params,
                                         const HilbertConfig& config) {
    params.validate();
    config.validate();
    std::vector<Operator> ops;

    const double gamma1 = 1.0 / params.t1_qubit;
    Operator decay = tensor(sigma_minus(config), cavity_identity(config));
    decay.matrix *= std::sqrt(gamma1);
    ops.push_back(std::move(decay));

    // 1/Tphi = 1/T2 - 1/(2 T1); collapse sqrt(1/(2 Tphi)) sigma_z gives the
    // off-diagonal decay rate 1/T2 when combined with T1.
    const double gamma_phi = 1.0 / params.t2_qubit - 0.5 / params.t1_qubit;
    if (gamma_phi > 1e-12 / params.t2_qubit) {
        Operator dephase = tensor(sigma_z(config), cavity_identity(config));
        dephase.matrix *= std::sqrt(0.5 * gamma_phi);
        ops.push_back(std::move(dephase));
    }

    Operator cavity_decay = tensor(qubit_identity(config), annihilation(config));
    cavity_decay.matrix *= std::sqrt(1.0 / params.t1_cavity);
    ops.push_back(std::move(cavity_decay));
    return ops;
}

SystemParams system_params_from_config(const Config& cfg) {
    SystemParams p;
    p.omega_q = kTwoPi * 1e9 * cfg.get_double("system", "omega_q_ghz", p.omega_q / (kTwoPi * 1e9));
    p.omega_s = kTwoPi * 1e9 * cfg.get_double("system", "omega_s_ghz", p.omega_s / (kTwoPi * 1e9));
    p.omega_r = kTwoPi * 1e9 * cfg.get_double("system", "omega_r_ghz", p.omega_r / (kTwoPi * 1e9));
    p.chi_sq = kTwoPi * 1e6 * cfg.get_double("system", "chi_sq_mhz", p.chi_sq / (kTwoPi * 1e6));
    p.chi_rq = kTwoPi * 1e6 * cfg.get_double("system", "chi_rq_mhz", p.chi_rq / (kTwoPi * 1e6));
    p.kerr_g = kTwoPi * 1e3 * cfg.get_double("system", "kerr_g_khz", p.kerr_g / (kTwoPi * 1e3));
    p.t1_qubit = 1e-6 * cfg.get_double("decoherence", "t1_qubit_us", p.t1_qubit * 1e6);
    p.t2_qubit = 1e-6 * cfg.get_double("decoherence", "t2_qubit_us", p.t2_qubit * 1e6);
    p.t1_cavity = 1e-6 * cfg.get_double("decoherence", "t1_cavity_us", p.t1_cavity * 1e6);
    p.readout_error_g = cfg.get_double("readout", "error_g", p.readout_error_g);
    p.readout_error_e = cfg.get_double("readout", "error_e", p.readout_error_e);
    p.validate();
    return p;
}

void system_params_to_config(const SystemParams& params, Config& cfg) {
    cfg.set_double("system", "omega_q_ghz", params.omega_q / (kTwoPi * 1e9));
    cfg.set_double("system", "omega_s_ghz", params.omega_s / (kTwoPi * 1e9));
    cfg.set_double("system", "omega_r_ghz", params.omega_r / (kTwoPi * 1e9));
    cfg.set_double("system", "chi_sq_mhz", params.chi_sq / (kTwoPi * 1e6));
    cfg.set_double("system", "chi_rq_mhz", params.chi_rq / (kTwoPi * 1e6));
    cfg.set_double("system", "kerr_g_khz", params.kerr_g / (kTwoPi * 1e3));
    cfg.set_double("decoherence", "t1_qubit_us", params.t1_qubit * 1e6);
    cfg.set_double("decoherence", "t2_qubit_us", params.t2_qubit * 1e6);
    cfg.set_double("decoherence", "t1_cavity_us", params.t1_cavity * 1e6);
    cfg.set_double("readout", "error_g", params.readout_error_g);
    cfg.set_double("readout", "error_e", params.readout_error_e);
}

} // namespace boslink
