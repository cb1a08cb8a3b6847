#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "boslink/propagate.hpp"
#include "oracles.hpp"

using namespace boslink;

namespace {

struct Stage {
    SystemParams params;
    HilbertConfig cfg;
    Operator h0;
    DriveOperators drives;

    explicit Stage(int cavity_dim, bool bare = false) : cfg(cavity_dim) {
        if (bare) {
            params.chi_sq = 0.0;
            params.kerr_g = 0.0;
        }
        h0 = drift_hamiltonian(params, FrameSpec::resonant(params), cfg);
        drives = drive_hamiltonians(cfg);
    }
};

double excited_population(const QuantumState& psi) {
    double pe = 0.0;
    for (int n = 0; n < psi.config.cavity_dim; ++n) {
        pe += std::norm(psi.amplitudes(psi.config.index(1, n)));
    }
    return pe;
}

} // namespace

TEST_CASE("zero pulse under a diagonal drift only rotates phases") {
    const Stage s(8);
    Vector v = Vector::Zero(s.cfg.total_dim());
    v(s.cfg.index(0, 2)) = std::sqrt(0.5);
    v(s.cfg.index(1, 3)) = std::sqrt(0.5);
    const QuantumState psi0(v, s.cfg);
    const ControlPulse pulse = ControlPulse::zero(2e-9, 400);
    const auto result = propagate_unitary(s.h0, s.drives, pulse, psi0);
    for (int i = 0; i < s.cfg.total_dim(); ++i) {
        CHECK(std::norm(result.final_state->amplitudes(i)) ==
              doctest::Approx(std::norm(psi0.amplitudes(i))).epsilon(1e-12));
    }
}

TEST_CASE("pi-area square pulse flips the qubit") {
    const Stage s(6, /*bare=*/true);
    const double eps = kTwoPi * 1e6;
    const double t = M_PI / eps;
    const int segments = 250;
    ControlPulse pulse = ControlPulse::zero(t / segments, segments);
    pulse.segments.col(0).setConstant(eps);
    const auto result = propagate_unitary(s.h0, s.drives, pulse, basis_state(s.cfg, 0, 0));
    CHECK(excited_population(*result.final_state) > 0.999);
}

TEST_CASE("cavity drive displaces the vacuum by -i eps t") {
    // eps is the complex envelope multiplying a-dagger: eps = (u_I + i u_Q)/2.
    const Stage s(16, /*bare=*/true);
    const double u = kTwoPi * 1e6;
    const double t = 400e-9;
    const int segments = 250;
    ControlPulse pulse = ControlPulse::zero(t / segments, segments);
    pulse.segments.col(2).setConstant(u);
    const auto result = propagate_unitary(s.h0, s.drives, pulse, basis_state(s.cfg, 0, 0));

    const Complex eps(u / 2.0, 0.0);
    const Complex alpha = Complex(0.0, -1.0) * eps * t;
    const Operator d = displacement(alpha, s.cfg);
    Vector expected = Vector::Zero(s.cfg.total_dim());
    Vector vac = Vector::Zero(s.cfg.cavity_dim);
    vac(0) = 1.0;
    expected.head(s.cfg.cavity_dim) = d.matrix * vac;
    CHECK(fidelity_state(*result.final_state, QuantumState(expected, s.cfg)) ==
          doctest::Approx(1.0).epsilon(1e-9));

    // Photon distribution Poissonian with nbar = |alpha|^2.
    const double nbar = std::norm(alpha);
    for (int n = 0; n < s.cfg.cavity_dim; ++n) {
        const double pn = std::norm(result.final_state->amplitudes(s.cfg.index(0, n)));
        CHECK(std::abs(pn - oracles::poisson_pmf(nbar, n)) < 1e-6);
    }
}

TEST_CASE("norm is preserved to 1e-9 over 3000 segments") {
    const Stage s(8);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(-kTwoPi * 3e6, kTwoPi * 3e6);
    Eigen::MatrixXd seg(3000, 4);
    for (int k = 0; k < seg.rows(); ++k) {
        for (int j = 0; j < 4; ++j) seg(k, j) = dist(rng);
    }
    const ControlPulse pulse(2e-9, seg);
    const auto result = propagate_unitary(s.h0, s.drives, pulse, basis_state(s.cfg, 0, 0));
    CHECK(std::abs(result.final_state->norm() - 1.0) < 1e-9);
}

TEST_CASE("splitting a segment in half leaves the final state unchanged") {
    const Stage s(8);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> dist(-kTwoPi * 2e6, kTwoPi * 2e6);
    Eigen::MatrixXd seg(40, 4);
    for (int k = 0; k < seg.rows(); ++k) {
        for (int j = 0; j < 4; ++j) seg(k, j) = dist(rng);
    }
    Eigen::MatrixXd halves(80, 4);
    for (int k = 0; k < 40; ++k) {
        halves.row(2 * k) = seg.row(k);
        halves.row(2 * k + 1) = seg.row(k);
    }
    const auto full = propagate_unitary(s.h0, s.drives, ControlPulse(2e-9, seg),
                                        basis_state(s.cfg, 0, 0));
    const auto split = propagate_unitary(s.h0, s.drives, ControlPulse(1e-9, halves),
                                         basis_state(s.cfg, 0, 0));
    CHECK((full.final_state->amplitudes - split.final_state->amplitudes).norm() < 1e-10);
}

TEST_CASE("leakage metric counts the top two Fock levels") {
    const HilbertConfig cfg(24);
    CHECK(leakage_metric(basis_state(cfg, 0, 0)) == 0.0);
    CHECK(leakage_metric(basis_state(cfg, 0, cfg.cavity_dim - 1)) == doctest::Approx(1.0));
    CHECK(leakage_metric(basis_state(cfg, 1, cfg.cavity_dim - 2)) == doctest::Approx(1.0));

    const Operator d = displacement(Complex(1.0, 0.0), cfg);
    Vector v = Vector::Zero(cfg.total_dim());
    Vector vac = Vector::Zero(cfg.cavity_dim);
    vac(0) = 1.0;
    v.head(cfg.cavity_dim) = d.matrix * vac;
    CHECK(leakage_metric(QuantumState(v, cfg)) < 1e-12);
}

TEST_CASE("truncation warning fires when leakage crosses the threshold") {
    const Stage s(4, /*bare=*/true); // tiny cavity: a strong drive leaks immediately
    ControlPulse pulse = ControlPulse::zero(2e-9, 400);
    pulse.segments.col(2).setConstant(kTwoPi * 5e6);
    const auto result = propagate_unitary(s.h0, s.drives, pulse, basis_state(s.cfg, 0, 0));
    CHECK(result.truncation_warning);
    CHECK(result.leakage_max > 1e-4);
}

TEST_CASE("lindblad with no collapse operators matches unitary evolution") {
    const Stage s(8);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dist(-kTwoPi * 2e6, kTwoPi * 2e6);
    Eigen::MatrixXd seg(300, 4);
    for (int k = 0; k < seg.rows(); ++k) {
        for (int j = 0; j < 4; ++j) seg(k, j) = dist(rng);
    }
    const ControlPulse pulse(2e-9, seg);
    const QuantumState psi0 = basis_state(s.cfg, 0, 0);
    const auto uni = propagate_unitary(s.h0, s.drives, pulse, psi0);
    const auto lind = propagate_lindblad(s.h0, s.drives, pulse, pure_density(psi0), {});
    const Matrix expected = pure_density(*uni.final_state).matrix;
    CHECK((lind.final_density->matrix - expected).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("qubit T1 decay follows the analytic exponential") {
    SystemParams params;
    params.t2_qubit = 2.0 * params.t1_qubit; // pure T1
    params.t1_cavity = 1e3;                  // effectively no cavity decay
    const HilbertConfig cfg(4);
    const Operator h0 = drift_hamiltonian(params, FrameSpec::resonant(params), cfg);
    const DriveOperators drives = drive_hamiltonians(cfg);
    const auto collapse = collapse_operators(params, cfg);

    const double t = 10e-6;
    const ControlPulse pulse = ControlPulse::zero(10e-9, 1000);
    REQUIRE(pulse.total_duration() == doctest::Approx(t));
    const auto result = propagate_lindblad(h0, drives, pulse, pure_density(basis_state(cfg, 1, 0)),
                                           collapse);
    const double pe = result.final_density->matrix(cfg.index(1, 0), cfg.index(1, 0)).real();
    CHECK(std::abs(pe - std::exp(-t / params.t1_qubit)) < 1e-5);
}

TEST_CASE("zero Hamiltonian and zero collapse keep rho constant") {
    const HilbertConfig cfg(4);
    const Operator h0(Matrix::Zero(cfg.total_dim(), cfg.total_dim()), cfg);
    const DriveOperators drives = drive_hamiltonians(cfg);
    const DensityMatrix rho0 = pure_density(basis_state(cfg, 1, 2));
    const auto result =
        propagate_lindblad(h0, drives, ControlPulse::zero(2e-9, 100), rho0, {});
    CHECK((result.final_density->matrix - rho0.matrix).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("lindblad output stays a physical density matrix") {
    const Stage s(6);
    const auto collapse = collapse_operators(s.params, s.cfg);
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> dist(-kTwoPi * 3e6, kTwoPi * 3e6);
    Eigen::MatrixXd seg(500, 4);
    for (int k = 0; k < seg.rows(); ++k) {
        for (int j = 0; j < 4; ++j) seg(k, j) = dist(rng);
    }
    const auto result = propagate_lindblad(s.h0, s.drives, ControlPulse(2e-9, seg),
                                           pure_density(basis_state(s.cfg, 1, 0)), collapse);
    const Matrix& rho = result.final_density->matrix;
    CHECK(std::abs(rho.trace().real() - 1.0) < 1e-8);
    CHECK((rho - rho.adjoint()).cwiseAbs().maxCoeff() < 1e-9);
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
    CHECK(es.eigenvalues().minCoeff() > -1e-7);
}

TEST_CASE("vanishing decoherence rates converge to the unitary result") {
    const Stage s(6);
    Eigen::MatrixXd seg(200, 4);
    seg.setZero();
    seg.col(0).setConstant(kTwoPi * 1.5e6);
    seg.col(2).setConstant(kTwoPi * 0.8e6);
    const ControlPulse pulse(2e-9, seg);
    const QuantumState psi0 = basis_state(s.cfg, 0, 0);
    const Matrix target = pure_density(*propagate_unitary(s.h0, s.drives, pulse, psi0)
                                            .final_state).matrix;
    double prev_err = 1e9;
    for (const double scale : {1.0, 1e-2, 1e-4}) {
        SystemParams weak = s.params;
        weak.t1_qubit /= scale;
        weak.t2_qubit /= scale;
        weak.t1_cavity /= scale;
        const auto collapse = collapse_operators(weak, s.cfg);
        const auto result =
            propagate_lindblad(s.h0, s.drives, pulse, pure_density(psi0), collapse);
        const double err = (result.final_density->matrix - target).cwiseAbs().maxCoeff();
        CHECK(err < prev_err + 1e-12);
        prev_err = err;
    }
    CHECK(prev_err < 1e-6);
}

TEST_CASE("control pulse CSV round trip in MHz units") {
    Eigen::MatrixXd seg(5, 4);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> dist(-kTwoPi * 4e6, kTwoPi * 4e6);
    for (int k = 0; k < 5; ++k) {
        for (int j = 0; j < 4; ++j) seg(k, j) = dist(rng);
    }
    const ControlPulse pulse(2e-9, seg, 1e-7);
    const ControlPulse restored = ControlPulse::from_csv(pulse.to_csv());
    CHECK(restored.n_segments() == 5);
    CHECK(restored.dt == doctest::Approx(2e-9).epsilon(1e-9));
    CHECK(restored.t0 == doctest::Approx(1e-7).epsilon(1e-9));
    CHECK((restored.segments - seg).cwiseAbs().maxCoeff() / seg.cwiseAbs().maxCoeff() < 1e-9);

    const std::string csv = pulse.to_csv();
    CHECK(csv.substr(0, csv.find('\n')) == "t_ns,qubit_I,qubit_Q,cavity_I,cavity_Q");
}

TEST_CASE("pulse validation rejects bad grids and over-range amplitudes") {
    CHECK_THROWS_AS(ControlPulse(0.0, Eigen::MatrixXd::Zero(3, 4)), ValidationError);
    CHECK_THROWS_AS(ControlPulse(1e-9, Eigen::MatrixXd::Zero(3, 3)), ValidationError);
    ControlPulse pulse = ControlPulse::zero(2e-9, 4);
    pulse.segments(1, 2) = 10.0;
    CHECK_THROWS_AS(pulse.validate(5.0), ValidationError);
    pulse.validate(); // no amp bound: fine
}

TEST_CASE("zero-segment pulse acts as the identity") {
    const Stage s(4);
    const QuantumState psi0 = basis_state(s.cfg, 1, 1);
    const auto result =
        propagate_unitary(s.h0, s.drives, ControlPulse::zero(2e-9, 0), psi0);
    CHECK((result.final_state->amplitudes - psi0.amplitudes).norm() == 0.0);
}
