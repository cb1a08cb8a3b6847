#include <doctest.h>

#include <random>

#include "boslink/tomography.hpp"
#include "oracles.hpp"

using namespace boslink;

namespace {

Matrix cavity_fock_density(const HilbertConfig& cfg, int n) {
    Matrix rho = Matrix::Zero(cfg.cavity_dim, cfg.cavity_dim);
    rho(n, n) = 1.0;
    return rho;
}

Matrix cavity_pure_density(const Vector& amps) {
    const Vector v = amps / amps.norm();
    return v * v.adjoint();
}

} // namespace

TEST_CASE("Wigner convention: vacuum peaks at 2/pi, Fock parity at the origin") {
    const HilbertConfig cfg(12);
    CHECK(wigner_point(cavity_fock_density(cfg, 0), Complex(0, 0)) ==
          doctest::Approx(kWignerConvention).epsilon(1e-10));
    for (int n = 1; n <= 4; ++n) {
        const double w0 = wigner_point(cavity_fock_density(cfg, n), Complex(0, 0));
        const double expected = kWignerConvention * ((n % 2 == 0) ? 1.0 : -1.0);
        CHECK(w0 == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("Fock-state Wigner maps match the Laguerre closed form") {
    const HilbertConfig cfg(12);
    const WignerGrid grid{2.4, 21};
    for (const int n : {1, 3, 4}) {
        const WignerMap map = wigner_cavity(cavity_fock_density(cfg, n), cfg, grid);
        double max_err = 0.0;
        for (int i = 0; i < grid.points; ++i) {
            for (int j = 0; j < grid.points; ++j) {
                const double reference = oracles::fock_wigner(n, grid.alpha(j, i));
                max_err = std::max(max_err, std::abs(map.at(j, i) - reference));
            }
        }
        CHECK(max_err < 1e-6);
    }
}

TEST_CASE("Fock-10 Wigner matches Laguerre even at the guard-band edge") {
    const HilbertConfig cfg(18);
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> dist(-3.4, 3.4);
    const Matrix rho = cavity_fock_density(cfg, 10);
    for (int trial = 0; trial < 25; ++trial) {
        Complex alpha(dist(rng), dist(rng));
        if (std::abs(alpha) > 3.4) alpha *= 3.4 / std::abs(alpha);
        CHECK(std::abs(wigner_point(rho, alpha) - oracles::fock_wigner(10, alpha)) < 1e-8);
    }
}

TEST_CASE("Wigner values respect the 2/pi bound and the map integrates to one") {
    const HilbertConfig cfg(12);
    Vector cat = Vector::Zero(12);
    cat(0) = 1.0;
    cat(3) = Complex(0.0, 1.0);
    const Matrix rho = cavity_pure_density(cat);
    const WignerMap map = wigner_cavity(rho, cfg, WignerGrid{2.4, 41});
    CHECK(map.values.cwiseAbs().maxCoeff() <= kWignerConvention + 1e-9);
    CHECK(std::abs(map.integral() - 1.0) < 1e-2);
}

TEST_CASE("superposition |0>+i|n> has n-fold rotational symmetry") {
    const HilbertConfig cfg(12);
    for (const int n : {2, 3}) {
        Vector sup = Vector::Zero(12);
        sup(0) = 1.0;
        sup(n) = Complex(0.0, 1.0);
        const double asym =
            wigner_rotation_asymmetry(cavity_pure_density(sup), cfg, WignerGrid{2.0, 9}, n);
        CHECK(asym < 1e-8);
        // A wrong fold breaks the symmetry.
        const double broken =
            wigner_rotation_asymmetry(cavity_pure_density(sup), cfg, WignerGrid{2.0, 9}, n + 1);
        CHECK(broken > 1e-3);
    }
}

TEST_CASE("Fock |n| radial cut shows n sign changes") {
    const HilbertConfig cfg(12);
    const WignerMap map = wigner_cavity(cavity_fock_density(cfg, 3), cfg, WignerGrid{2.4, 81});
    CHECK(map.radial_sign_changes() == 3);
}

TEST_CASE("grid extent beyond the truncation guard is rejected") {
    const HilbertConfig cfg(10);
    CHECK_THROWS_AS(wigner_cavity(cavity_fock_density(cfg, 0), cfg, WignerGrid{2.5, 11}),
                    TruncationError);
}

TEST_CASE("ideal photon distribution of a displaced vacuum is Poisson") {
    const HilbertConfig cfg(18);
    const SystemParams params;
    const Complex alpha(1.3, -0.4);
    const Operator d = displacement(alpha, cfg);
    Vector v = Vector::Zero(cfg.total_dim());
    Vector vac = Vector::Zero(cfg.cavity_dim);
    vac(0) = 1.0;
    v.head(cfg.cavity_dim) = d.matrix * vac;
    const PhotonDistribution dist = photon_distribution(QuantumState(v, cfg),
                                                        PhotonMeasurementMode::Ideal, params);
    CHECK(std::abs(dist.probabilities.sum() - 1.0) < 1e-9);
    const double nbar = std::norm(alpha);
    for (int n = 0; n < cfg.cavity_dim; ++n) {
        CHECK(std::abs(dist.probabilities(n) - oracles::poisson_pmf(nbar, n)) < 1e-6);
    }
    CHECK(dist.poisson_deviation() < 1e-6);
    CHECK(dist.mean() == doctest::Approx(nbar).epsilon(1e-6));
}

TEST_CASE("ideal mode on Fock |3> is a point mass") {
    const HilbertConfig cfg(8);
    const SystemParams params;
    const PhotonDistribution dist =
        photon_distribution(basis_state(cfg, 0, 3), PhotonMeasurementMode::Ideal, params);
    CHECK(dist.probabilities(3) == doctest::Approx(1.0));
}

TEST_CASE("selective pi-pulses resolve photon number through the readout channel") {
    const HilbertConfig cfg(8);
    SystemParams params;
    params.readout_error_g = 0.02;
    params.readout_error_e = 0.02;
    const PhotonDistribution dist = photon_distribution(
        basis_state(cfg, 0, 1), PhotonMeasurementMode::SelectivePulse, params,
        /*shots=*/100000, /*seed=*/17);
    CHECK(dist.probabilities(1) >= 0.95);
    CHECK(dist.probabilities(1) <= 1.0);
    CHECK(std::abs(dist.probabilities.sum() - 1.0) < 1e-12);
}

TEST_CASE("selective mode on a coherent state tracks the Poisson weights") {
    const HilbertConfig cfg(10);
    SystemParams params;
    params.readout_error_g = 0.0;
    params.readout_error_e = 0.0;
    const Operator d = displacement(Complex(1.0, 0.0), cfg);
    Vector v = Vector::Zero(cfg.total_dim());
    Vector vac = Vector::Zero(cfg.cavity_dim);
    vac(0) = 1.0;
    v.head(cfg.cavity_dim) = d.matrix * vac;
    const PhotonDistribution dist = photon_distribution(
        QuantumState(v, cfg), PhotonMeasurementMode::SelectivePulse, params);
    for (int n = 0; n <= 4; ++n) {
        CHECK(std::abs(dist.probabilities(n) - oracles::poisson_pmf(1.0, n)) < 5e-3);
    }
}

TEST_CASE("too-short selective pulses are flagged") {
    const HilbertConfig cfg(6);
    const SystemParams params;
    SelectivePulseOptions opts;
    opts.sigma = 0.3e-6; // bandwidth comparable to chi
    CHECK_THROWS_AS(photon_distribution(basis_state(cfg, 0, 0),
                                        PhotonMeasurementMode::SelectivePulse, params, 0, 1,
                                        opts),
                    ValidationError);
}

TEST_CASE("MLE recovers Fock |1> from noiseless parity data") {
    const HilbertConfig cfg(8);
    const Matrix truth = cavity_fock_density(cfg, 1);
    const auto records = parity_records_from_state(truth, WignerGrid{1.4, 21});
    MleOptions opts;
    opts.dim = 8;
    const MleResult result = mle_reconstruct(records, cfg, opts);
    CHECK(fidelity_matrices(result.rho, truth) > 0.999);
    for (std::size_t i = 1; i < result.loglik_history.size(); ++i) {
        CHECK(result.loglik_history[i] >= result.loglik_history[i - 1] - 1e-12);
    }
}

TEST_CASE("MLE recovers the maximally mixed state on the n <= 1 subspace") {
    const HilbertConfig cfg(8);
    Matrix truth = Matrix::Zero(8, 8);
    truth(0, 0) = 0.5;
    truth(1, 1) = 0.5;
    const auto records = parity_records_from_state(truth, WignerGrid{1.4, 15});
    MleOptions opts;
    opts.dim = 8;
    const MleResult result = mle_reconstruct(records, cfg, opts);
    // Trace distance below 0.01.
    Eigen::SelfAdjointEigenSolver<Matrix> es(result.rho - truth);
    CHECK(0.5 * es.eigenvalues().cwiseAbs().sum() < 0.01);
}

TEST_CASE("MLE with zero iterations returns the maximally mixed seed") {
    const HilbertConfig cfg(6);
    const auto records = parity_records_from_state(cavity_fock_density(cfg, 0), WignerGrid{1.0, 5});
    MleOptions opts;
    opts.dim = 6;
    opts.max_iters = 0;
    const MleResult result = mle_reconstruct(records, cfg, opts);
    CHECK((result.rho - Matrix::Identity(6, 6) / 6.0).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("MLE flags rank-deficient measurement sets") {
    const HilbertConfig cfg(8);
    const auto records = parity_records_from_state(cavity_fock_density(cfg, 0), WignerGrid{1.0, 3});
    MleOptions opts;
    opts.dim = 8;
    opts.max_iters = 5;
    const MleResult result = mle_reconstruct(records, cfg, opts);
    CHECK(result.rank_warning); // 9 settings < 64
}

TEST_CASE("MLE accepts photon-count records") {
    const HilbertConfig cfg(6);
    // Displaced photon-number data for the vacuum at a few settings.
    std::vector<TomographyRecord> records;
    for (const Complex alpha : {Complex(0.0, 0.0), Complex(0.6, 0.0), Complex(0.0, 0.6),
                                Complex(-0.5, 0.3), Complex(0.4, -0.4)}) {
        TomographyRecord rec;
        rec.alpha = alpha;
        Eigen::VectorXd pn(6);
        for (int n = 0; n < 6; ++n) pn(n) = oracles::poisson_pmf(std::norm(alpha), n);
        rec.counts = pn;
        records.push_back(rec);
    }
    MleOptions opts;
    opts.dim = 6;
    const MleResult result = mle_reconstruct(records, cfg, opts);
    CHECK(result.rho(0, 0).real() > 0.98); // vacuum recovered
}

TEST_CASE("process fidelity identities") {
    CHECK(fidelity_process(identity_chi(), identity_chi()) == doctest::Approx(1.0));

    // X gate process matrix: chi_XX = 1.
    Eigen::Matrix4cd chi_x = Eigen::Matrix4cd::Zero();
    chi_x(1, 1) = 1.0;
    CHECK(fidelity_process(identity_chi(), chi_x) == doctest::Approx(0.0));

    // Depolarizing channel of strength lambda vs identity: 1 - 3 lambda / 4.
    const double lambda = 0.3;
    Eigen::Matrix4cd chi_dep = Eigen::Matrix4cd::Zero();
    chi_dep(0, 0) = 1.0 - 3.0 * lambda / 4.0;
    chi_dep(1, 1) = chi_dep(2, 2) = chi_dep(3, 3) = lambda / 4.0;
    CHECK(fidelity_process(identity_chi(), chi_dep) ==
          doctest::Approx(1.0 - 3.0 * lambda / 4.0));
}

TEST_CASE("chi reconstruction from Bloch pairs recovers known channels") {
    using V3 = Eigen::Vector3d;
    const std::vector<V3> inputs = {V3(0, 0, 1), V3(0, 0, -1), V3(1, 0, 0),
                                    V3(-1, 0, 0), V3(0, 1, 0), V3(0, -1, 0)};
    // Identity channel.
    double min_eig = 0.0;
    const Eigen::Matrix4cd chi_id = chi_from_bloch_pairs(inputs, inputs, &min_eig);
    CHECK(std::abs(chi_id(0, 0).real() - 1.0) < 1e-10);
    CHECK(min_eig > -1e-10);

    // X rotation by pi: Bloch (x, y, z) -> (x, -y, -z).
    std::vector<V3> flipped;
    for (const auto& r : inputs) flipped.push_back(V3(r(0), -r(1), -r(2)));
    const Eigen::Matrix4cd chi_x = chi_from_bloch_pairs(inputs, flipped, nullptr);
    CHECK(std::abs(chi_x(1, 1).real() - 1.0) < 1e-10);

    // Depolarizing: r -> (1 - lambda) r.
    const double lambda = 0.2;
    std::vector<V3> shrunk;
    for (const auto& r : inputs) shrunk.push_back((1.0 - lambda) * r);
    const Eigen::Matrix4cd chi_dep = chi_from_bloch_pairs(inputs, shrunk, nullptr);
    CHECK(fidelity_process(identity_chi(), chi_dep) ==
          doctest::Approx(1.0 - 3.0 * lambda / 4.0).epsilon(1e-10));

    // chi is Hermitian with unit trace after reconstruction.
    CHECK(std::abs(chi_dep.trace().real() - 1.0) < 1e-9);
    CHECK((chi_dep - chi_dep.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("process benchmark at k = 0 reports unit fidelity") {
    SystemParams params;
    params.readout_error_g = 0.0;
    params.readout_error_e = 0.0;
    const HilbertConfig cfg(4);
    const ControlPulse idle = ControlPulse::zero(2e-9, 1);
    ProcessBenchmarkOptions opts;
    opts.decoherence = false;
    const auto results = process_benchmark(idle, idle, {0}, params, cfg, opts);
    REQUIRE(results.size() == 1);
    CHECK(results[0].process_fidelity == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("exactly invertible rounds give F(k) = F(1)^k = 1") {
    // chi = K = 0 and H0 = 0: reversing the segment order and negating the
    // amplitudes realizes the exact inverse, so one round is the identity.
    SystemParams params;
    params.chi_sq = 0.0;
    params.kerr_g = 0.0;
    const HilbertConfig cfg(6);

    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> dist(-kTwoPi * 2e6, kTwoPi * 2e6);
    Eigen::MatrixXd seg(120, 4);
    for (int k = 0; k < seg.rows(); ++k) {
        for (int j = 0; j < 4; ++j) seg(k, j) = dist(rng);
    }
    const ControlPulse enc(2e-9, seg);
    const ControlPulse dec(2e-9, -seg.colwise().reverse());

    ProcessBenchmarkOptions opts;
    opts.decoherence = false;
    const auto results = process_benchmark(enc, dec, {0, 1, 2, 3, 4, 5}, params, cfg, opts);
    for (const auto& r : results) {
        CHECK(std::abs(r.process_fidelity - 1.0) < 1e-3);
        CHECK(std::abs(r.fitted_single_round_fidelity - 1.0) < 1e-3);
    }
}

TEST_CASE("readout errors cancel under unfolding but bite when unfolding is off") {
    SystemParams params; // defaults carry 2% assignment errors
    const HilbertConfig cfg(4);
    const ControlPulse idle = ControlPulse::zero(2e-9, 1);

    ProcessBenchmarkOptions opts;
    opts.decoherence = false;
    opts.unfold_readout = true;
    const auto corrected = process_benchmark(idle, idle, {1}, params, cfg, opts);
    CHECK(corrected[0].process_fidelity == doctest::Approx(1.0).epsilon(1e-9));

    opts.unfold_readout = false;
    const auto raw = process_benchmark(idle, idle, {1}, params, cfg, opts);
    CHECK(raw[0].process_fidelity < 0.98);
}

TEST_CASE("process results CSV uses the documented schema") {
    const std::vector<ProcessResult> results(1);
    const std::string csv = process_results_csv(results);
    CHECK(csv.substr(0, csv.find('\n')) ==
          "rounds,process_fidelity,fitted_F1,decoherence_flag,length_km");
}
