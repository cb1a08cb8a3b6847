#include "boslink/hilbert.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include <json.hpp>

namespace boslink {

namespace {

void check_finite(const Matrix& m, const char* who) {
    if (!m.allFinite()) throw ValidationError(std::string(who) + ": non-finite entries");
}

} // namespace

QuantumState::QuantumState(Vector amps, HilbertConfig cfg)
    : amplitudes(std::move(amps)), config(cfg) {
    config.validate();
    if (amplitudes.size() != config.total_dim()) {
        throw ValidationError("QuantumState: amplitude vector length " +
                              std::to_string(amplitudes.size()) + " != total_dim " +
                              std::to_string(config.total_dim()));
    }
    if (!amplitudes.allFinite()) throw ValidationError("QuantumState: non-finite amplitudes");
}

DensityMatrix::DensityMatrix(Matrix m, HilbertConfig cfg) : matrix(std::move(m)), config(cfg) {
    config.validate();
    if (matrix.rows() != config.total_dim() || matrix.cols() != config.total_dim()) {
        throw ValidationError("DensityMatrix: matrix is " + std::to_string(matrix.rows()) + "x" +
                              std::to_string(matrix.cols()) + ", expected total_dim " +
                              std::to_string(config.total_dim()));
    }
    check_finite(matrix, "DensityMatrix");
    // Cheap sanity gates; the tight spectral checks live in validation tests.
    if ((matrix - matrix.adjoint()).cwiseAbs().maxCoeff() > 1e-6) {
        throw ValidationError("DensityMatrix: not Hermitian");
    }
    if (std::abs(matrix.trace().real() - 1.0) > 1e-6 || std::abs(matrix.trace().imag()) > 1e-9) {
        throw ValidationError("DensityMatrix: trace != 1");
    }
}

Operator::Operator(Matrix m, HilbertConfig cfg) : matrix(std::move(m)), config(cfg) {
    config.validate();
    if (matrix.rows() != matrix.cols()) throw ValidationError("Operator: matrix not square");
    const int d = static_cast<int>(matrix.rows());
    if (d != config.total_dim() && d != config.cavity_dim && d != config.qubit_dim) {
        throw ValidationError("Operator: dimension " + std::to_string(d) +
                              " matches neither composite nor single-mode space");
    }
    check_finite(matrix, "Operator");
}

QuantumState basis_state(const HilbertConfig& config, int qubit_level, int fock_level) {
    config.validate();
    if (qubit_level < 0 || qubit_level >= config.qubit_dim) {
        throw ValidationError("basis_state: qubit level out of range");
    }
    if (fock_level < 0 || fock_level >= config.cavity_dim) {
        throw ValidationError("basis_state: Fock level out of range");
    }
    Vector v = Vector::Zero(config.total_dim());
    v(config.index(qubit_level, fock_level)) = 1.0;
    return QuantumState(std::move(v), config);
}

QuantumState cavity_state(const HilbertConfig& config, const Vector& cavity_amplitudes,
                          int qubit_level) {
    config.validate();
    if (cavity_amplitudes.size() != config.cavity_dim) {
        throw ValidationError("cavity_state: coefficient vector length != cavity_dim");
    }
    const double n = cavity_amplitudes.norm();
    if (n == 0.0) throw ValidationError("cavity_state: zero vector");
    Vector v = Vector::Zero(config.total_dim());
    v.segment(qubit_level * config.cavity_dim, config.cavity_dim) = cavity_amplitudes / n;
    return QuantumState(std::move(v), config);
}

DensityMatrix pure_density(const QuantumState& psi) {
    Vector v = psi.amplitudes / psi.amplitudes.norm();
    return DensityMatrix(v * v.adjoint(), psi.config);
}

Operator annihilation(const HilbertConfig& config) {
    config.validate();
    const int n = config.cavity_dim;
    Matrix a = Matrix::Zero(n, n);
    for (int k = 1; k < n; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
    return Operator(std::move(a), config);
}

Operator number_operator(const HilbertConfig& config) {
    config.validate();
    const int n = config.cavity_dim;
    Matrix m = Matrix::Zero(n, n);
    for (int k = 0; k < n; ++k) m(k, k) = static_cast<double>(k);
    return Operator(std::move(m), config);
}

Operator parity_operator(const HilbertConfig& config) {
    config.validate();
    const int n = config.cavity_dim;
    Matrix m = Matrix::Zero(n, n);
    for (int k = 0; k < n; ++k) m(k, k) = (k % 2 == 0) ? 1.0 : -1.0;
    return Operator(std::move(m), config);
}

Operator qubit_identity(const HilbertConfig& config) {
    return Operator(Matrix::Identity(2, 2), config);
}

Operator sigma_x(const HilbertConfig& config) {
    Matrix m(2, 2);
    m << 0.0, 1.0, 1.0, 0.0;
    return Operator(std::move(m), config);
}

Operator sigma_y(const HilbertConfig& config) {
    Matrix m(2, 2);
    m << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
    return Operator(std::move(m), config);
}

Operator sigma_z(const HilbertConfig& config) {
    Matrix m(2, 2);
    m << 1.0, 0.0, 0.0, -1.0;
    return Operator(std::move(m), config);
}

Operator sigma_minus(const HilbertConfig& config) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 1) = 1.0;
    return Operator(std::move(m), config);
}

Operator sigma_plus(const HilbertConfig& config) {
    Matrix m = Matrix::Zero(2, 2);
    m(1, 0) = 1.0;
    return Operator(std::move(m), config);
}

Operator cavity_identity(const HilbertConfig& config) {
    return Operator(Matrix::Identity(config.cavity_dim, config.cavity_dim), config);
}

Operator composite_identity(const HilbertConfig& config) {
    return Operator(Matrix::Identity(config.total_dim(), config.total_dim()), config);
}

Operator tensor(const Operator& qubit_op, const Operator& cavity_op) {
    if (!(qubit_op.config == cavity_op.config)) {
        throw ValidationError("tensor: operand configs differ");
    }
    const HilbertConfig& cfg = qubit_op.config;
    if (qubit_op.dim() != cfg.qubit_dim) {
        throw ValidationError("tensor: first operand must be a qubit operator (dim 2)");
    }
    if (cavity_op.dim() != cfg.cavity_dim) {
        throw ValidationError("tensor: second operand must be a cavity operator");
    }
    Matrix k = Eigen::kroneckerProduct(qubit_op.matrix, cavity_op.matrix);
    return Operator(std::move(k), cfg);
}

Operator displacement(Complex alpha, const HilbertConfig& config) {
    config.validate();
    const double n_bar = std::norm(alpha);
    if (n_bar > static_cast<double>(config.cavity_dim - 6)) {
        throw TruncationError("displacement: |alpha|^2 = " + std::to_string(n_bar) +
                              " exceeds guard band cavity_dim - 6 = " +
                              std::to_string(config.cavity_dim - 6));
    }
    const Matrix a = annihilation(config).matrix;
    const Matrix gen = alpha * a.adjoint() - std::conj(alpha) * a; // anti-Hermitian
    return Operator(expm_matrix(gen), config);
}

namespace {

// Scaling-and-squaring with the degree-13 Padé approximant.
Matrix expm_pade(const Matrix& m) {
    static const double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                               1187353796428800.0,  129060195264000.0,   10559470521600.0,
                               670442572800.0,      33522128640.0,       1323241920.0,
                               40840800.0,          960960.0,            16380.0,
                               182.0,               1.0};
    const double theta13 = 5.371920351148152;
    const int d = static_cast<int>(m.rows());
    const double norm1 = m.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm1 > theta13) {
        squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
    }
    const Matrix a = m / std::pow(2.0, squarings);
    const Matrix i = Matrix::Identity(d, d);
    const Matrix a2 = a * a;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a4 * a2;
    const Matrix u =
        a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 +
             b[1] * i);
    const Matrix v =
        a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * i;
    Matrix r = (v - u).partialPivLu().solve(v + u);
    for (int s = 0; s < squarings; ++s) r = r * r;
    return r;
}

} // namespace

Matrix expm_matrix(const Matrix& m, Complex scale) {
    if (m.rows() != m.cols()) throw ValidationError("expm: matrix not square");
    check_finite(m, "expm");
    if (!std::isfinite(scale.real()) || !std::isfinite(scale.imag())) {
        throw ValidationError("expm: non-finite scale");
    }
    const Matrix scaled = scale * m;
    const double magnitude = scaled.cwiseAbs().maxCoeff();
    if (magnitude == 0.0) return Matrix::Identity(m.rows(), m.cols());
    const double herm_dev = (scaled - scaled.adjoint()).cwiseAbs().maxCoeff();
    const double anti_dev = (scaled + scaled.adjoint()).cwiseAbs().maxCoeff();
    const double tol = 1e-13 * magnitude;
    if (herm_dev <= tol) {
        Eigen::SelfAdjointEigenSolver<Matrix> es((scaled + scaled.adjoint()) / 2.0);
        return es.eigenvectors() * es.eigenvalues().array().exp().matrix().asDiagonal() *
               es.eigenvectors().adjoint();
    }
    if (anti_dev <= tol) {
        // scaled = iH with H Hermitian: exp(iH) = V exp(i lambda) V†.
        const Matrix h = (scaled - scaled.adjoint()) / Complex(0.0, 2.0);
        Eigen::SelfAdjointEigenSolver<Matrix> es(h);
        Eigen::VectorXcd phases(h.rows());
        for (Eigen::Index k = 0; k < h.rows(); ++k) {
            phases(k) = std::exp(Complex(0.0, es.eigenvalues()(k)));
        }
        return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
    }
    return expm_pade(scaled);
}

Matrix expm_hermitian_propagator(const Matrix& hamiltonian, double dt) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hamiltonian);
    Eigen::VectorXcd phases(hamiltonian.rows());
    for (Eigen::Index k = 0; k < hamiltonian.rows(); ++k) {
        phases(k) = std::exp(Complex(0.0, -es.eigenvalues()(k) * dt));
    }
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

Operator expm(const Operator& op, Complex scale) {
    return Operator(expm_matrix(op.matrix, scale), op.config);
}

double fidelity_state(const QuantumState& a, const QuantumState& b) {
    if (!(a.config == b.config)) throw ValidationError("fidelity_state: config mismatch");
    const Complex overlap = a.amplitudes.dot(b.amplitudes); // conjugates the left argument
    const double na = a.amplitudes.squaredNorm();
    const double nb = b.amplitudes.squaredNorm();
    return std::norm(overlap) / (na * nb);
}

namespace {

// Tr sqrt(X) for Hermitian PSD X, clipping small negative eigenvalues.
double trace_sqrt_psd(const Matrix& x) {
    Eigen::SelfAdjointEigenSolver<Matrix> es((x + x.adjoint()) / 2.0);
    double acc = 0.0;
    for (Eigen::Index k = 0; k < x.rows(); ++k) {
        const double lambda = es.eigenvalues()(k);
        if (lambda > 0.0) acc += std::sqrt(lambda);
    }
    return acc;
}

Matrix matrix_sqrt_psd(const Matrix& x) {
    Eigen::SelfAdjointEigenSolver<Matrix> es((x + x.adjoint()) / 2.0);
    Eigen::VectorXd roots(x.rows());
    for (Eigen::Index k = 0; k < x.rows(); ++k) {
        roots(k) = es.eigenvalues()(k) > 0.0 ? std::sqrt(es.eigenvalues()(k)) : 0.0;
    }
    return es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().adjoint();
}

} // namespace

double fidelity_matrices(const Matrix& rho, const Matrix& sigma) {
    if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols() || rho.rows() != rho.cols()) {
        throw ValidationError("fidelity_matrices: dimension mismatch");
    }
    const Matrix sqrt_rho = matrix_sqrt_psd(rho);
    const double t = trace_sqrt_psd(sqrt_rho * sigma * sqrt_rho);
    return std::min(1.0, t * t);
}

double fidelity_state(const DensityMatrix& a, const DensityMatrix& b) {
    if (!(a.config == b.config)) throw ValidationError("fidelity_state: config mismatch");
    return fidelity_matrices(a.matrix, b.matrix);
}

double fidelity_state(const QuantumState& a, const DensityMatrix& b) {
    if (!(a.config == b.config)) throw ValidationError("fidelity_state: config mismatch");
    const Vector v = a.amplitudes / a.amplitudes.norm();
    return std::real(v.dot(b.matrix * v));
}

double fidelity_state(const DensityMatrix& a, const QuantumState& b) {
    return fidelity_state(b, a);
}

Matrix partial_trace_cavity(const Matrix& rho, const HilbertConfig& config) {
    const int n = config.cavity_dim;
    if (rho.rows() != config.total_dim() || rho.cols() != config.total_dim()) {
        throw ValidationError("partial_trace_cavity: dimension mismatch");
    }
    Matrix out(2, 2);
    for (int q = 0; q < 2; ++q) {
        for (int p = 0; p < 2; ++p) {
            out(q, p) = rho.block(q * n, p * n, n, n).trace();
        }
    }
    return out;
}

Matrix partial_trace_qubit(const Matrix& rho, const HilbertConfig& config) {
    const int n = config.cavity_dim;
    if (rho.rows() != config.total_dim() || rho.cols() != config.total_dim()) {
        throw ValidationError("partial_trace_qubit: dimension mismatch");
    }
    return rho.block(0, 0, n, n) + rho.block(n, n, n, n);
}

std::string matrix_to_json(const Matrix& m) {
    nlohmann::json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    std::vector<double> re, im;
    re.reserve(m.size());
    im.reserve(m.size());
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            re.push_back(m(r, c).real());
            im.push_back(m(r, c).imag());
        }
    }
    j["re"] = re;
    j["im"] = im;
    return j.dump(2);
}

Matrix matrix_from_json(const std::string& json_text) {
    const auto j = nlohmann::json::parse(json_text);
    const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
    const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
    const auto re = j.at("re").get<std::vector<double>>();
    const auto im = j.at("im").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(re.size()) != rows * cols || re.size() != im.size()) {
        throw ValidationError("matrix_from_json: re/im length mismatch");
    }
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = Complex(re[r * cols + c], im[r * cols + c]);
        }
    }
    return m;
}

} // namespace boslink
