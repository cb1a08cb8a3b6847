#include "boslink/grape.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "boslink/config.hpp"
#include "boslink/parallel.hpp"

namespace boslink {

namespace {

struct SegmentCache {
    Matrix vecs;              // eigenvectors V of the segment Hamiltonian
    Eigen::VectorXd evals;    // eigenvalues
    Eigen::VectorXcd phases;  // exp(-i evals dt)
};

void build_segment_hamiltonian(const GrapeProblem& p, const Eigen::MatrixXd& u, int k,
                               Matrix& h) {
    h = p.h0.matrix;
    for (int j = 0; j < ControlPulse::kChannels; ++j) {
        if (u(k, j) != 0.0) h += u(k, j) * p.drives.channel(j).matrix;
    }
}

SegmentCache diagonalize_segment(const GrapeProblem& p, const Eigen::MatrixXd& u, int k,
                                 double dt) {
    Matrix h(p.config.total_dim(), p.config.total_dim());
    build_segment_hamiltonian(p, u, k, h);
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    SegmentCache cache;
    cache.vecs = es.eigenvectors();
    cache.evals = es.eigenvalues();
    cache.phases.resize(cache.evals.size());
    for (Eigen::Index i = 0; i < cache.evals.size(); ++i) {
        cache.phases(i) = std::exp(Complex(0.0, -cache.evals(i) * dt));
    }
    return cache;
}

// phi1(z) = (e^z - 1)/z, stable near z = 0.
Complex phi1(Complex z) {
    if (std::abs(z) < 1e-5) {
        return 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0;
    }
    return (std::exp(z) - 1.0) / z;
}

// Divided-difference table G_pq = (f(l_p) - f(l_q))/(l_p - l_q), f = exp(-i l dt).
Matrix loewner_table(const Eigen::VectorXd& evals, const Eigen::VectorXcd& phases, double dt) {
    const Eigen::Index n = evals.size();
    Matrix g(n, n);
    const Complex mi_dt(0.0, -dt);
    for (Eigen::Index q = 0; q < n; ++q) {
        for (Eigen::Index p = 0; p < n; ++p) {
            const Complex z = mi_dt * (evals(p) - evals(q));
            g(p, q) = mi_dt * phases(q) * phi1(z);
        }
    }
    return g;
}

double penalty_norm(const GrapeProblem& p) {
    const int m = std::max(1, p.n_segments());
    return 1.0 / (p.amp_max * p.amp_max * m);
}

ObjectiveParts penalties_of(const GrapeProblem& p, const Eigen::MatrixXd& u) {
    ObjectiveParts parts;
    const double scale = penalty_norm(p);
    if (p.penalties.amplitude_weight > 0.0) {
        parts.amplitude_penalty = p.penalties.amplitude_weight * scale * u.squaredNorm();
    }
    if (p.penalties.derivative_weight > 0.0 && u.rows() > 1) {
        const Eigen::MatrixXd diff = u.bottomRows(u.rows() - 1) - u.topRows(u.rows() - 1);
        parts.derivative_penalty = p.penalties.derivative_weight * scale * diff.squaredNorm();
    }
    return parts;
}

Eigen::MatrixXd penalty_gradient(const GrapeProblem& p, const Eigen::MatrixXd& u) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(u.rows(), u.cols());
    const double scale = penalty_norm(p);
    if (p.penalties.amplitude_weight > 0.0) {
        g += 2.0 * p.penalties.amplitude_weight * scale * u;
    }
    if (p.penalties.derivative_weight > 0.0 && u.rows() > 1) {
        const Eigen::MatrixXd diff = u.bottomRows(u.rows() - 1) - u.topRows(u.rows() - 1);
        g.topRows(u.rows() - 1) -= 2.0 * p.penalties.derivative_weight * scale * diff;
        g.bottomRows(u.rows() - 1) += 2.0 * p.penalties.derivative_weight * scale * diff;
    }
    return g;
}

// Overlap sum g = (1/d) sum_k <t_k|U|i_k>.
Complex overlap_sum(const GrapeProblem& p, const Eigen::MatrixXd& u, double dt) {
    const int d = static_cast<int>(p.initial_states.size());
    std::vector<Vector> psi(d);
    for (int k = 0; k < d; ++k) psi[k] = p.initial_states[k].amplitudes;

    const int m = static_cast<int>(u.rows());
    const int block = 256;
    std::vector<SegmentCache> caches(std::min(block, std::max(m, 1)));
    for (int start = 0; start < m; start += block) {
        const int count = std::min(block, m - start);
        parallel_for(count, p.options.threads, [&](int i) {
            caches[static_cast<std::size_t>(i)] = diagonalize_segment(p, u, start + i, dt);
        });
        for (int i = 0; i < count; ++i) {
            const SegmentCache& c = caches[static_cast<std::size_t>(i)];
            for (int k = 0; k < d; ++k) {
                psi[k] = c.vecs * (c.phases.asDiagonal() * (c.vecs.adjoint() * psi[k]));
            }
        }
    }

    Complex g(0.0, 0.0);
    for (int k = 0; k < d; ++k) g += p.target_states[k].amplitudes.dot(psi[k]);
    return g / static_cast<double>(d);
}

struct DriveTriplets {
    std::vector<int> rows, cols;
    std::vector<Complex> vals;
};

DriveTriplets extract_triplets(const Matrix& m) {
    DriveTriplets t;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (std::abs(m(r, c)) > 0.0) {
                t.rows.push_back(static_cast<int>(r));
                t.cols.push_back(static_cast<int>(c));
                t.vals.push_back(m(r, c));
            }
        }
    }
    return t;
}

} // namespace

void GrapeProblem::validate() const {
    config.validate();
    const std::size_t d = initial_states.size();
    if (d < 1 || d > 2) throw ValidationError("GrapeProblem: d must be 1 or 2");
    if (target_states.size() != d) {
        throw ValidationError("GrapeProblem: initial/target list length mismatch");
    }
    for (const auto& s : initial_states) {
        if (!(s.config == config)) throw ValidationError("GrapeProblem: state config mismatch");
    }
    for (const auto& s : target_states) {
        if (!(s.config == config)) throw ValidationError("GrapeProblem: state config mismatch");
    }
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const Complex gi =
                initial_states[i].amplitudes.dot(initial_states[j].amplitudes);
            const Complex gt = target_states[i].amplitudes.dot(target_states[j].amplitudes);
            const Complex want = (i == j) ? Complex(1.0, 0.0) : Complex(0.0, 0.0);
            if (std::abs(gi - want) > 1e-10 || std::abs(gt - want) > 1e-10) {
                throw ValidationError("GrapeProblem: state lists must be orthonormal");
            }
        }
    }
    if (h0.dim() != config.total_dim()) {
        throw ValidationError("GrapeProblem: drift Hamiltonian not on the composite space");
    }
    if (duration < 0 || dt <= 0) throw ValidationError("GrapeProblem: bad pulse template");
    if (amp_max <= 0) throw ValidationError("GrapeProblem: amp_max must be positive");
}

ObjectiveParts objective_parts(const GrapeProblem& problem, const ControlPulse& pulse) {
    problem.validate();
    if (pulse.segments.cols() != ControlPulse::kChannels) {
        throw ValidationError("objective: pulse channel count mismatch");
    }
    ObjectiveParts parts = penalties_of(problem, pulse.segments);
    const Complex g = overlap_sum(problem, pulse.segments, pulse.dt);
    parts.fidelity = std::norm(g);
    return parts;
}

double objective(const GrapeProblem& problem, const ControlPulse& pulse) {
    return objective_parts(problem, pulse).value();
}

Eigen::MatrixXd gradient(const GrapeProblem& problem, const ControlPulse& pulse) {
    problem.validate();
    const Eigen::MatrixXd& u = pulse.segments;
    const double dt = pulse.dt;
    const int m = static_cast<int>(u.rows());
    const int d = static_cast<int>(problem.initial_states.size());
    const int dim = problem.config.total_dim();

    // Forward pass: cache eigensystems and the state entering each segment.
    std::vector<SegmentCache> caches(m);
    parallel_for(m, problem.options.threads, [&](int k) {
        caches[static_cast<std::size_t>(k)] = diagonalize_segment(problem, u, k, dt);
    });

    std::vector<std::vector<Vector>> entering(m + 1, std::vector<Vector>(d));
    for (int k = 0; k < d; ++k) entering[0][k] = problem.initial_states[k].amplitudes;
    for (int s = 0; s < m; ++s) {
        const SegmentCache& c = caches[static_cast<std::size_t>(s)];
        for (int k = 0; k < d; ++k) {
            entering[s + 1][k] =
                c.vecs * (c.phases.asDiagonal() * (c.vecs.adjoint() * entering[s][k]));
        }
    }

    Complex g(0.0, 0.0);
    for (int k = 0; k < d; ++k) g += problem.target_states[k].amplitudes.dot(entering[m][k]);
    g /= static_cast<double>(d);

    std::array<DriveTriplets, ControlPulse::kChannels> drive_triplets;
    for (int j = 0; j < ControlPulse::kChannels; ++j) {
        drive_triplets[static_cast<std::size_t>(j)] =
            extract_triplets(problem.drives.channel(j).matrix);
    }

    // Backward pass: chi_k runs from the target through U† segment by segment;
    // each segment contributes <chi|dU|psi> via the eigenbasis Loewner table.
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(m, ControlPulse::kChannels);
    std::vector<Vector> chi(d);
    for (int k = 0; k < d; ++k) chi[k] = problem.target_states[k].amplitudes;

    Matrix outer(dim, dim), gmat(dim, dim);
    for (int s = m - 1; s >= 0; --s) {
        const SegmentCache& c = caches[static_cast<std::size_t>(s)];
        outer.setZero();
        std::vector<Vector> chi_tilde(d);
        for (int k = 0; k < d; ++k) {
            chi_tilde[k] = c.vecs.adjoint() * chi[k];
            const Vector psi_tilde = c.vecs.adjoint() * entering[s][k];
            outer.noalias() += chi_tilde[k].conjugate() * psi_tilde.transpose();
        }
        outer /= static_cast<double>(d);
        const Matrix loewner = loewner_table(c.evals, c.phases, dt);
        gmat.noalias() = c.vecs * (outer.cwiseProduct(loewner)).transpose() * c.vecs.adjoint();

        for (int j = 0; j < ControlPulse::kChannels; ++j) {
            const DriveTriplets& t = drive_triplets[static_cast<std::size_t>(j)];
            Complex dg(0.0, 0.0);
            for (std::size_t i = 0; i < t.vals.size(); ++i) {
                dg += t.vals[i] * gmat(t.cols[i], t.rows[i]);
            }
            grad(s, j) = 2.0 * std::real(std::conj(g) * dg);
        }

        for (int k = 0; k < d; ++k) {
            chi[k] = c.vecs * (c.phases.conjugate().asDiagonal() * chi_tilde[k]);
        }
    }

    grad -= penalty_gradient(problem, u);
    return grad;
}

std::string GrapeResult::history_csv() const {
    std::ostringstream out;
    out << "iter,fidelity,grad_norm,penalty\n";
    for (const auto& it : history) {
        out << it.iteration << "," << format_double(it.fidelity) << ","
            << format_double(it.grad_norm) << "," << format_double(it.penalty) << "\n";
    }
    return out.str();
}

namespace {

ControlPulse random_initial_pulse(const GrapeProblem& p) {
    const int m = p.n_segments();
    std::mt19937_64 rng(p.options.seed);
    std::uniform_real_distribution<double> dist(-p.options.init_scale * p.amp_max,
                                                p.options.init_scale * p.amp_max);
    Eigen::MatrixXd u(m, ControlPulse::kChannels);
    for (int k = 0; k < m; ++k) {
        for (int j = 0; j < ControlPulse::kChannels; ++j) u(k, j) = dist(rng);
    }
    return ControlPulse(p.dt, std::move(u));
}

Eigen::MatrixXd clamp_controls(const Eigen::MatrixXd& u, double bound) {
    return u.cwiseMax(-bound).cwiseMin(bound);
}

} // namespace

GrapeResult optimize(const GrapeProblem& problem) {
    return optimize(problem, random_initial_pulse(problem));
}

GrapeResult optimize(const GrapeProblem& problem, const ControlPulse& initial_pulse) {
    problem.validate();
    if (initial_pulse.n_segments() != problem.n_segments() ||
        std::abs(initial_pulse.dt - problem.dt) > 1e-18) {
        throw ValidationError("optimize: initial pulse grid differs from the problem template");
    }
    const GrapeOptions& opt = problem.options;

    GrapeResult result;
    ControlPulse pulse = initial_pulse;
    pulse.segments = clamp_controls(pulse.segments, problem.amp_max);

    ObjectiveParts parts = objective_parts(problem, pulse);
    Eigen::MatrixXd grad = gradient(problem, pulse);
    double grad_norm = grad.norm() * problem.amp_max; // w.r.t. normalized controls

    const auto record = [&](int iter) {
        result.history.push_back(GrapeIterate{iter, parts.fidelity,
                                              parts.amplitude_penalty + parts.derivative_penalty,
                                              parts.value(), grad_norm});
    };
    record(0);

    double step = opt.initial_step;
    Eigen::MatrixXd velocity = Eigen::MatrixXd::Zero(pulse.segments.rows(), 4);
    int accepted = 0;
    std::string reason;
    bool converged = false;

    // L-BFGS memory over normalized controls x = u/amp_max (ascent form).
    std::vector<Eigen::MatrixXd> mem_s, mem_y;
    std::vector<double> mem_rho;
    Eigen::MatrixXd gx_prev;

    const auto lbfgs_direction = [&](const Eigen::MatrixXd& gx) {
        Eigen::MatrixXd q = gx;
        const int m = static_cast<int>(mem_s.size());
        std::vector<double> alpha(m);
        for (int i = m - 1; i >= 0; --i) {
            alpha[i] = mem_rho[i] * (mem_s[i].array() * q.array()).sum();
            q -= alpha[i] * mem_y[i];
        }
        if (m > 0) {
            const double yy = (mem_y[m - 1].array() * mem_y[m - 1].array()).sum();
            if (yy > 0) q *= 1.0 / (mem_rho[m - 1] * yy);
        }
        for (int i = 0; i < m; ++i) {
            const double beta = mem_rho[i] * (mem_y[i].array() * q.array()).sum();
            q += (alpha[i] - beta) * mem_s[i];
        }
        return q;
    };

    while (true) {
        if (opt.target_fidelity > 0.0 && parts.fidelity >= opt.target_fidelity) {
            converged = true;
            reason = "target fidelity reached";
            break;
        }
        if (grad_norm < opt.gradient_tolerance) {
            converged = true;
            reason = "gradient tolerance reached";
            break;
        }
        if (accepted >= opt.max_iters) {
            reason = "max iterations";
            break;
        }

        // Ascent direction in normalized controls x = u/amp_max.
        const Eigen::MatrixXd gx = grad * problem.amp_max;
        bool moved = false;

        if (opt.step_rule == StepRule::Momentum) {
            velocity = opt.momentum_beta * velocity + step * gx;
            const Eigen::MatrixXd cand =
                clamp_controls(pulse.segments + velocity * problem.amp_max, problem.amp_max);
            ControlPulse cand_pulse(pulse.dt, cand, pulse.t0);
            const ObjectiveParts cand_parts = objective_parts(problem, cand_pulse);
            if (cand_parts.value() < parts.value()) {
                velocity.setZero();
                step *= opt.step_shrink;
                if (step < 1e-14) {
                    reason = "step collapsed";
                    break;
                }
                continue;
            }
            velocity = (cand - pulse.segments) / problem.amp_max;
            pulse.segments = cand;
            parts = cand_parts;
            step = std::min(step * 1.05, 1e6);
            moved = true;
        } else {
            Eigen::MatrixXd direction;
            double trial = step;
            if (opt.step_rule == StepRule::Lbfgs) {
                direction = lbfgs_direction(gx);
                if ((direction.array() * gx.array()).sum() <= 0.0) {
                    mem_s.clear();
                    mem_y.clear();
                    mem_rho.clear();
                    direction = gx;
                }
                trial = 1.0;
            } else {
                direction = gx;
            }

            while (trial > 1e-14) {
                const Eigen::MatrixXd cand = clamp_controls(
                    pulse.segments + trial * direction * problem.amp_max, problem.amp_max);
                ControlPulse cand_pulse(pulse.dt, cand, pulse.t0);
                const ObjectiveParts cand_parts = objective_parts(problem, cand_pulse);
                const double ascent =
                    (gx.array() * ((cand - pulse.segments).array() / problem.amp_max)).sum();
                if (cand_parts.value() >= parts.value() + opt.armijo_c * trial * ascent &&
                    cand_parts.value() > parts.value()) {
                    if (opt.step_rule == StepRule::Lbfgs) {
                        mem_s.push_back((cand - pulse.segments) / problem.amp_max);
                    } else {
                        step = std::min(trial * opt.step_grow, 1e6);
                    }
                    pulse.segments = cand;
                    parts = cand_parts;
                    moved = true;
                    break;
                }
                trial *= opt.step_shrink;
                if (opt.step_rule == StepRule::LineSearch) step = trial;
            }
            if (!moved) {
                if (opt.step_rule == StepRule::Lbfgs && !mem_s.empty()) {
                    // Quasi-Newton step failed; drop the memory and retry
                    // along the raw gradient next round.
                    mem_s.clear();
                    mem_y.clear();
                    mem_rho.clear();
                    continue;
                }
                reason = "line search stalled";
                break;
            }
        }

        ++accepted;
        gx_prev = gx;
        grad = gradient(problem, pulse);
        grad_norm = grad.norm() * problem.amp_max;
        if (opt.step_rule == StepRule::Lbfgs && moved && !mem_s.empty() &&
            mem_s.size() > mem_y.size()) {
            const Eigen::MatrixXd y = gx_prev - grad * problem.amp_max;
            const double sy = (mem_s.back().array() * y.array()).sum();
            if (sy > 1e-14) {
                mem_y.push_back(y);
                mem_rho.push_back(1.0 / sy);
                if (static_cast<int>(mem_s.size()) > opt.lbfgs_memory) {
                    mem_s.erase(mem_s.begin());
                    mem_y.erase(mem_y.begin());
                    mem_rho.erase(mem_rho.begin());
                }
            } else {
                mem_s.pop_back(); // curvature condition failed; discard the pair
            }
        }
        record(accepted);
    }

    result.pulse = std::move(pulse);
    result.final_fidelity = parts.fidelity;
    result.final_objective = parts.value();
    result.converged = converged;
    result.iterations = accepted;
    result.stop_reason = reason;
    return result;
}

std::string EncodeSpec::name() const {
    if (basis == EncodeBasis::Binomial) return "binomial";
    return "fock" + std::to_string(n);
}

std::pair<Vector, Vector> encode_basis_states(const EncodeSpec& spec,
                                              const HilbertConfig& config) {
    const int n = config.cavity_dim;
    if (spec.max_photon() + 6 > n) {
        throw TruncationError("encode target needs cavity_dim >= " +
                              std::to_string(spec.max_photon() + 6) + ", got " +
                              std::to_string(n));
    }
    Vector c0 = Vector::Zero(n), c1 = Vector::Zero(n);
    if (spec.basis == EncodeBasis::Binomial) {
        c0(0) = 1.0 / std::sqrt(2.0);
        c0(4) = 1.0 / std::sqrt(2.0);
        c1(2) = 1.0;
    } else {
        if (spec.n < 1) throw ValidationError("EncodeSpec: Fock n must be >= 1");
        c0(0) = 1.0;
        c1(spec.n) = 1.0;
    }
    return {c0, c1};
}

namespace {

GrapeProblem base_problem(const SystemParams& params, const HilbertConfig& config,
                          double duration, double dt) {
    GrapeProblem p;
    p.config = config;
    p.h0 = drift_hamiltonian(params, FrameSpec::resonant(params), config);
    p.drives = drive_hamiltonians(config);
    p.duration = duration;
    p.dt = dt;
    return p;
}

} // namespace

GrapeProblem make_encode_problem(const EncodeSpec& spec, const SystemParams& params,
                                 const HilbertConfig& config, double duration, double dt) {
    auto [c0, c1] = encode_basis_states(spec, config);
    GrapeProblem p = base_problem(params, config, duration, dt);
    p.initial_states = {basis_state(config, 0, 0), basis_state(config, 1, 0)};
    p.target_states = {cavity_state(config, c0), cavity_state(config, c1)};
    return p;
}

GrapeProblem make_decode_problem(const EncodeSpec& spec, const SystemParams& params,
                                 const HilbertConfig& config, double duration, double dt) {
    GrapeProblem p = make_encode_problem(spec, params, config, duration, dt);
    std::swap(p.initial_states, p.target_states);
    return p;
}

GrapeProblem make_state_prep_problem(const Vector& cavity_target, const SystemParams& params,
                                     const HilbertConfig& config, double duration, double dt) {
    if (cavity_target.size() != config.cavity_dim) {
        throw ValidationError("make_state_prep_problem: target length != cavity_dim");
    }
    int top = 0;
    for (int k = 0; k < config.cavity_dim; ++k) {
        if (std::abs(cavity_target(k)) > 1e-12) top = k;
    }
    if (top + 6 > config.cavity_dim) {
        throw TruncationError("state-prep target needs cavity_dim >= " + std::to_string(top + 6));
    }
    GrapeProblem p = base_problem(params, config, duration, dt);
    p.initial_states = {basis_state(config, 0, 0)};
    p.target_states = {cavity_state(config, cavity_target)};
    return p;
}

} // namespace boslink
