#include "boslink/propagate.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "boslink/config.hpp"

namespace boslink {

ControlPulse::ControlPulse(double segment_dt, Eigen::MatrixXd segment_amplitudes,
                           double start_offset)
    : dt(segment_dt), t0(start_offset), segments(std::move(segment_amplitudes)) {
    if (dt <= 0) throw ValidationError("ControlPulse: dt must be positive");
    if (segments.cols() != kChannels) {
        throw ValidationError("ControlPulse: expected 4 channel columns");
    }
    if (!segments.allFinite()) throw ValidationError("ControlPulse: non-finite amplitudes");
}

ControlPulse ControlPulse::zero(double segment_dt, int n_segments) {
    if (n_segments < 0) throw ValidationError("ControlPulse: negative segment count");
    return ControlPulse(segment_dt, Eigen::MatrixXd::Zero(n_segments, kChannels));
}

double ControlPulse::max_channel_magnitude() const {
    double m = 0.0;
    for (int k = 0; k < n_segments(); ++k) {
        m = std::max(m, std::hypot(segments(k, 0), segments(k, 1)));
        m = std::max(m, std::hypot(segments(k, 2), segments(k, 3)));
    }
    return m;
}

void ControlPulse::validate(double amp_max) const {
    if (dt <= 0) throw ValidationError("ControlPulse: dt must be positive");
    if (!segments.allFinite()) throw ValidationError("ControlPulse: non-finite amplitudes");
    if (amp_max > 0.0 && segments.cwiseAbs().maxCoeff() > amp_max * (1.0 + 1e-12)) {
        throw ValidationError("ControlPulse: amplitude exceeds amp_max");
    }
}

std::string ControlPulse::to_csv() const {
    std::ostringstream out;
    out << "t_ns,qubit_I,qubit_Q,cavity_I,cavity_Q\n";
    const double to_mhz = 1.0 / (kTwoPi * 1e6);
    for (int k = 0; k < n_segments(); ++k) {
        out << format_double((t0 + k * dt) * 1e9);
        for (int j = 0; j < kChannels; ++j) {
            out << "," << format_double(segments(k, j) * to_mhz);
        }
        out << "\n";
    }
    return out.str();
}

ControlPulse ControlPulse::from_csv(const std::string& csv_text) {
    std::istringstream in(csv_text);
    std::string line;
    std::vector<std::array<double, 5>> rows;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (first) { // header
            first = false;
            continue;
        }
        std::array<double, 5> row{};
        std::istringstream cells(line);
        std::string cell;
        for (int j = 0; j < 5; ++j) {
            if (!std::getline(cells, cell, ',')) {
                throw ValidationError("ControlPulse::from_csv: short row");
            }
            row[j] = std::stod(cell);
        }
        rows.push_back(row);
    }
    if (rows.empty()) return ControlPulse::zero(2e-9, 0);
    double dt = 2e-9;
    if (rows.size() >= 2) dt = (rows[1][0] - rows[0][0]) * 1e-9;
    if (dt <= 0) throw ValidationError("ControlPulse::from_csv: non-increasing time column");
    Eigen::MatrixXd seg(rows.size(), kChannels);
    const double from_mhz = kTwoPi * 1e6;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        for (int j = 0; j < kChannels; ++j) seg(k, j) = rows[k][j + 1] * from_mhz;
    }
    return ControlPulse(dt, std::move(seg), rows[0][0] * 1e-9);
}

double leakage_metric(const QuantumState& psi) {
    const int n = psi.config.cavity_dim;
    double pop = 0.0;
    for (int q = 0; q < 2; ++q) {
        pop += std::norm(psi.amplitudes(psi.config.index(q, n - 1)));
        pop += std::norm(psi.amplitudes(psi.config.index(q, n - 2)));
    }
    return pop;
}

double leakage_metric(const DensityMatrix& rho) {
    const int n = rho.config.cavity_dim;
    double pop = 0.0;
    for (int q = 0; q < 2; ++q) {
        pop += rho.matrix(rho.config.index(q, n - 1), rho.config.index(q, n - 1)).real();
        pop += rho.matrix(rho.config.index(q, n - 2), rho.config.index(q, n - 2)).real();
    }
    return pop;
}

namespace {

double leakage_of_vector(const Vector& v, const HilbertConfig& cfg) {
    const int n = cfg.cavity_dim;
    double pop = 0.0;
    for (int q = 0; q < 2; ++q) {
        pop += std::norm(v(cfg.index(q, n - 1)));
        pop += std::norm(v(cfg.index(q, n - 2)));
    }
    return pop;
}

void check_propagation_inputs(const Operator& h0, const DriveOperators& drives,
                              const HilbertConfig& cfg) {
    if (h0.dim() != cfg.total_dim()) {
        throw ValidationError("propagate: drift Hamiltonian is not on the composite space");
    }
    for (int j = 0; j < ControlPulse::kChannels; ++j) {
        if (drives.channel(j).dim() != cfg.total_dim()) {
            throw ValidationError("propagate: drive operator dimension mismatch");
        }
    }
}

// Sparse view of a collapse operator for O(nnz^2) application of c rho c†.
struct SparseOp {
    std::vector<int> rows, cols;
    std::vector<Complex> vals;

    explicit SparseOp(const Matrix& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                if (std::abs(m(r, c)) > 0.0) {
                    rows.push_back(static_cast<int>(r));
                    cols.push_back(static_cast<int>(c));
                    vals.push_back(m(r, c));
                }
            }
        }
    }

    void add_sandwich(const Matrix& rho, Matrix& out) const { // out += c rho c†
        const std::size_t nnz = vals.size();
        for (std::size_t i = 0; i < nnz; ++i) {
            for (std::size_t j = 0; j < nnz; ++j) {
                out(rows[i], rows[j]) += vals[i] * std::conj(vals[j]) * rho(cols[i], cols[j]);
            }
        }
    }
};

} // namespace

PropagationResult propagate_unitary(const Operator& h0, const DriveOperators& drives,
                                    const ControlPulse& pulse, const QuantumState& psi0,
                                    const PropagateOptions& options) {
    const HilbertConfig cfg = psi0.config;
    check_propagation_inputs(h0, drives, cfg);
    pulse.validate();

    PropagationResult result;
    Vector psi = psi0.amplitudes;
    result.leakage_max = leakage_of_vector(psi, cfg);

    Matrix h(cfg.total_dim(), cfg.total_dim());
    for (int k = 0; k < pulse.n_segments(); ++k) {
        h = h0.matrix;
        for (int j = 0; j < ControlPulse::kChannels; ++j) {
            if (pulse.segments(k, j) != 0.0) h += pulse.segments(k, j) * drives.channel(j).matrix;
        }
        Matrix u = expm_hermitian_propagator(h, pulse.dt);
        psi = u * psi;
        if (options.cache_propagators) result.propagators.push_back(std::move(u));
        if (options.snapshot_stride > 0 && (k + 1) % options.snapshot_stride == 0) {
            result.snapshots.push_back(psi);
        }
        result.leakage_max = std::max(result.leakage_max, leakage_of_vector(psi, cfg));
    }

    result.leakage_final = leakage_of_vector(psi, cfg);
    result.truncation_warning = result.leakage_max > options.leakage_threshold;
    result.final_state = QuantumState(std::move(psi), cfg);
    return result;
}

PropagationResult propagate_lindblad(const Operator& h0, const DriveOperators& drives,
                                     const ControlPulse& pulse, const DensityMatrix& rho0,
                                     const std::vector<Operator>& collapse,
                                     const PropagateOptions& options) {
    const HilbertConfig cfg = rho0.config;
    check_propagation_inputs(h0, drives, cfg);
    pulse.validate();
    if (options.substeps < 1) throw ValidationError("propagate_lindblad: substeps must be >= 1");
    const int d = cfg.total_dim();

    std::vector<SparseOp> sparse_collapse;
    Matrix damping = Matrix::Zero(d, d); // -(1/2) sum c†c
    for (const auto& c : collapse) {
        if (c.dim() != d) throw ValidationError("propagate_lindblad: collapse dim mismatch");
        sparse_collapse.emplace_back(c.matrix);
        damping -= 0.5 * (c.matrix.adjoint() * c.matrix);
    }

    PropagationResult result;
    Matrix rho = rho0.matrix;
    result.leakage_max = leakage_metric(rho0);

    const double h_step = pulse.dt / options.substeps;
    Matrix a(d, d), k1(d, d), k2(d, d), k3(d, d), k4(d, d), work(d, d);

    // rhs(rho) = A rho + rho A† + sum_c c rho c†, with A = -iH + damping.
    const auto rhs = [&](const Matrix& r, Matrix& out) {
        out.noalias() = a * r;
        out.noalias() += r * a.adjoint();
        for (const auto& c : sparse_collapse) c.add_sandwich(r, out);
    };

    for (int k = 0; k < pulse.n_segments(); ++k) {
        Matrix ham = h0.matrix;
        for (int j = 0; j < ControlPulse::kChannels; ++j) {
            if (pulse.segments(k, j) != 0.0) {
                ham += pulse.segments(k, j) * drives.channel(j).matrix;
            }
        }
        a = Complex(0.0, -1.0) * ham + damping;
        for (int s = 0; s < options.substeps; ++s) {
            rhs(rho, k1);
            work = rho + (0.5 * h_step) * k1;
            rhs(work, k2);
            work = rho + (0.5 * h_step) * k2;
            rhs(work, k3);
            work = rho + h_step * k3;
            rhs(work, k4);
            rho += (h_step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        const double trace_drift = std::abs(rho.trace().real() - 1.0) + std::abs(rho.trace().imag());
        if (trace_drift > 1e-6) {
            throw NumericalError("propagate_lindblad: trace drift " +
                                 std::to_string(trace_drift) +
                                 " at segment " + std::to_string(k) +
                                 "; reduce the step size");
        }
        double leak = 0.0;
        for (int q = 0; q < 2; ++q) {
            leak += rho(cfg.index(q, cfg.cavity_dim - 1), cfg.index(q, cfg.cavity_dim - 1)).real();
            leak += rho(cfg.index(q, cfg.cavity_dim - 2), cfg.index(q, cfg.cavity_dim - 2)).real();
        }
        result.leakage_max = std::max(result.leakage_max, leak);
    }

    rho = (rho + rho.adjoint().eval()) / 2.0;
    result.trace_error = std::abs(rho.trace().real() - 1.0);
    result.truncation_warning = result.leakage_max > options.leakage_threshold;
    DensityMatrix out(std::move(rho), cfg);
    result.leakage_final = leakage_metric(out);
    result.final_density = std::move(out);
    return result;
}

} // namespace boslink
