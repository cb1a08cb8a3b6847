#include <doctest.h>

#include <random>

#include "boslink/grape.hpp"
#include "oracles.hpp"

using namespace boslink;

namespace {

GrapeProblem toy_problem(int cavity_dim, bool bare, double duration, double dt) {
    SystemParams params;
    if (bare) {
        params.chi_sq = 0.0;
        params.kerr_g = 0.0;
    }
    const HilbertConfig cfg(cavity_dim);
    GrapeProblem p;
    p.config = cfg;
    p.h0 = drift_hamiltonian(params, FrameSpec::resonant(params), cfg);
    p.drives = drive_hamiltonians(cfg);
    p.duration = duration;
    p.dt = dt;
    p.initial_states = {basis_state(cfg, 0, 0)};
    p.target_states = {basis_state(cfg, 1, 0)};
    return p;
}

ControlPulse random_pulse(const GrapeProblem& p, std::uint64_t seed, double scale) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-scale * p.amp_max, scale * p.amp_max);
    Eigen::MatrixXd seg(p.n_segments(), 4);
    for (int k = 0; k < seg.rows(); ++k) {
        for (int j = 0; j < 4; ++j) seg(k, j) = dist(rng);
    }
    return ControlPulse(p.dt, seg);
}

} // namespace

TEST_CASE("objective identity cases") {
    GrapeProblem p = toy_problem(6, false, 0.0, 2e-9);
    p.target_states = p.initial_states; // zero-duration identity
    CHECK(objective(p, ControlPulse::zero(p.dt, 0)) == doctest::Approx(1.0));

    // Zero pulse cannot reach an orthogonal target under free evolution.
    GrapeProblem q = toy_problem(6, false, 200e-9, 2e-9);
    CHECK(objective(q, ControlPulse::zero(q.dt, q.n_segments())) ==
          doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("objective matches a brute-force propagator overlap in the chi-free toy model") {
    GrapeProblem p = toy_problem(5, true, 100e-9, 2e-9);
    const HilbertConfig cfg = p.config;
    p.initial_states = {basis_state(cfg, 0, 0), basis_state(cfg, 1, 0)};
    p.target_states = {basis_state(cfg, 1, 0), basis_state(cfg, 0, 0)}; // qubit swap
    const ControlPulse pulse = random_pulse(p, 21, 0.5);

    // Oracle: dense product of Taylor-series segment exponentials.
    Matrix u = Matrix::Identity(cfg.total_dim(), cfg.total_dim());
    for (int k = 0; k < pulse.n_segments(); ++k) {
        Matrix h = p.h0.matrix;
        for (int j = 0; j < 4; ++j) h += pulse.segments(k, j) * p.drives.channel(j).matrix;
        u = oracles::expm_taylor(Complex(0.0, -pulse.dt) * h) * u;
    }
    Complex g(0, 0);
    for (int k = 0; k < 2; ++k) {
        g += p.target_states[k].amplitudes.dot(u * p.initial_states[k].amplitudes);
    }
    const double reference = std::norm(g / 2.0);
    CHECK(objective(p, pulse) == doctest::Approx(reference).epsilon(1e-10));
}

TEST_CASE("analytic gradient matches central finite differences") {
    GrapeProblem p = toy_problem(6, false, 80e-9, 2e-9); // 40 segments
    const HilbertConfig cfg = p.config;
    p.initial_states = {basis_state(cfg, 0, 0), basis_state(cfg, 1, 0)};
    p.target_states = {basis_state(cfg, 0, 0), basis_state(cfg, 0, 1)};
    p.penalties.amplitude_weight = 0.3;
    p.penalties.derivative_weight = 0.1;

    for (const std::uint64_t seed : {101u, 202u, 303u}) {
        ControlPulse pulse = random_pulse(p, seed, 0.4);
        const Eigen::MatrixXd grad = gradient(p, pulse);
        const double h = 1e-6 * p.amp_max;
        double max_rel = 0.0;
        const double scale = grad.cwiseAbs().maxCoeff();
        for (int k = 0; k < pulse.n_segments(); k += 7) {
            for (int j = 0; j < 4; ++j) {
                ControlPulse plus = pulse, minus = pulse;
                plus.segments(k, j) += h;
                minus.segments(k, j) -= h;
                const double fd = (objective(p, plus) - objective(p, minus)) / (2.0 * h);
                max_rel = std::max(max_rel, std::abs(fd - grad(k, j)) / scale);
            }
        }
        CHECK(max_rel < 1e-5);
    }
}

TEST_CASE("gradient vanishes at a fidelity-1 point") {
    GrapeProblem p = toy_problem(5, true, 100e-9, 2e-9);
    p.h0.matrix.setZero();
    p.target_states = p.initial_states;
    const ControlPulse zero = ControlPulse::zero(p.dt, p.n_segments());
    CHECK(objective(p, zero) == doctest::Approx(1.0));
    CHECK(gradient(p, zero).norm() * p.amp_max < 1e-8);
}

TEST_CASE("penalty contribution to the gradient matches the closed form") {
    GrapeProblem p = toy_problem(5, false, 60e-9, 2e-9);
    const ControlPulse pulse = random_pulse(p, 77, 0.5);

    GrapeProblem with = p;
    with.penalties.amplitude_weight = 0.7;
    with.penalties.derivative_weight = 0.2;
    const Eigen::MatrixXd diff = gradient(p, pulse) - gradient(with, pulse);

    // Analytic penalty gradient (objective subtracts the penalties).
    const int m = pulse.n_segments();
    const double scale = 1.0 / (p.amp_max * p.amp_max * m);
    Eigen::MatrixXd expected = 2.0 * 0.7 * scale * pulse.segments;
    const Eigen::MatrixXd d =
        pulse.segments.bottomRows(m - 1) - pulse.segments.topRows(m - 1);
    expected.topRows(m - 1) -= 2.0 * 0.2 * scale * d;
    expected.bottomRows(m - 1) += 2.0 * 0.2 * scale * d;
    CHECK((diff - expected).cwiseAbs().maxCoeff() < 1e-20);
}

TEST_CASE("objective is invariant under a joint target phase") {
    GrapeProblem p = toy_problem(6, false, 100e-9, 2e-9);
    const HilbertConfig cfg = p.config;
    p.initial_states = {basis_state(cfg, 0, 0), basis_state(cfg, 1, 0)};
    p.target_states = {basis_state(cfg, 0, 0), basis_state(cfg, 0, 1)};
    const ControlPulse pulse = random_pulse(p, 55, 0.6);
    const double before = objective(p, pulse);

    const Complex phase = std::exp(Complex(0.0, 0.87));
    for (auto& t : p.target_states) {
        Vector v = t.amplitudes * phase;
        t = QuantumState(v, cfg);
    }
    CHECK(objective(p, pulse) == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("optimize converges on a fast state transfer and history is monotone") {
    GrapeProblem p = toy_problem(4, true, 250e-9, 2e-9);
    p.options.max_iters = 200;
    p.options.target_fidelity = 0.999;
    const GrapeResult result = optimize(p);
    CHECK(result.converged);
    CHECK(result.final_fidelity >= 0.999);
    for (std::size_t i = 1; i < result.history.size(); ++i) {
        CHECK(result.history[i].objective >= result.history[i - 1].objective - 1e-14);
    }
    // Amplitude bound respected.
    CHECK(result.pulse.segments.cwiseAbs().maxCoeff() <= p.amp_max * (1 + 1e-12));
}

TEST_CASE("momentum rule reaches the same target behind the same interface") {
    GrapeProblem p = toy_problem(4, true, 250e-9, 2e-9);
    p.options.max_iters = 400;
    p.options.target_fidelity = 0.995;
    p.options.step_rule = StepRule::Momentum;
    const GrapeResult result = optimize(p);
    CHECK(result.converged);
    CHECK(result.final_fidelity >= 0.995);
}

TEST_CASE("max_iters = 0 returns the initial pulse with its objective") {
    GrapeProblem p = toy_problem(4, true, 100e-9, 2e-9);
    p.options.max_iters = 0;
    const GrapeResult result = optimize(p);
    CHECK(result.iterations == 0);
    CHECK_FALSE(result.converged);
    REQUIRE(result.history.size() == 1);
    CHECK(result.history[0].objective ==
          doctest::Approx(objective(p, result.pulse)).epsilon(1e-12));
}

TEST_CASE("encode problems build the documented state lists") {
    const SystemParams params;
    const HilbertConfig cfg = HilbertConfig::for_max_photon(4);

    const GrapeProblem fock =
        make_encode_problem({EncodeBasis::Fock, 1}, params, cfg, 2e-6);
    REQUIRE(fock.initial_states.size() == 2);
    CHECK(std::abs(fock.initial_states[0].amplitude(0, 0) - 1.0) < 1e-15);
    CHECK(std::abs(fock.initial_states[1].amplitude(1, 0) - 1.0) < 1e-15);
    CHECK(std::abs(fock.target_states[0].amplitude(0, 0) - 1.0) < 1e-15);
    CHECK(std::abs(fock.target_states[1].amplitude(0, 1) - 1.0) < 1e-15);

    const GrapeProblem binom =
        make_encode_problem({EncodeBasis::Binomial, 0}, params, cfg, 3e-6);
    const double s = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(binom.target_states[0].amplitude(0, 0) - s) < 1e-12);
    CHECK(std::abs(binom.target_states[0].amplitude(0, 4) - s) < 1e-12);
    CHECK(std::abs(binom.target_states[1].amplitude(0, 2) - 1.0) < 1e-12);

    const GrapeProblem decode =
        make_decode_problem({EncodeBasis::Fock, 1}, params, cfg, 2e-6);
    CHECK(std::abs(decode.initial_states[1].amplitude(0, 1) - 1.0) < 1e-15);
    CHECK(std::abs(decode.target_states[1].amplitude(1, 0) - 1.0) < 1e-15);
}

TEST_CASE("encode targets beyond the truncation guard are rejected") {
    const SystemParams params;
    CHECK_THROWS_AS(make_encode_problem({EncodeBasis::Fock, 5}, params, HilbertConfig(8), 2e-6),
                    TruncationError);
    CHECK_THROWS_AS(make_encode_problem({EncodeBasis::Binomial, 0}, params, HilbertConfig(9), 3e-6),
                    TruncationError);
}

TEST_CASE("problem validation enforces orthonormal state lists") {
    GrapeProblem p = toy_problem(5, false, 100e-9, 2e-9);
    p.initial_states = {basis_state(p.config, 0, 0), basis_state(p.config, 0, 0)};
    p.target_states = {basis_state(p.config, 0, 0), basis_state(p.config, 0, 1)};
    CHECK_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("history CSV has the documented schema") {
    GrapeProblem p = toy_problem(4, true, 100e-9, 2e-9);
    p.options.max_iters = 3;
    const GrapeResult result = optimize(p);
    const std::string csv = result.history_csv();
    CHECK(csv.substr(0, csv.find('\n')) == "iter,fidelity,grad_norm,penalty");
}
