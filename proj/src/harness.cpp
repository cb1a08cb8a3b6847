#include "boslink/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "boslink/parallel.hpp"
#include "boslink/version.hpp"

namespace fs = std::filesystem;

namespace boslink {

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::uint64_t mix_seed(std::uint64_t base, const std::string& tag) {
    return base ^ fnv1a64(tag);
}

} // namespace

double GrapeSettings::duration_for(const std::string& key) const {
    const auto it = durations.find(key);
    if (it == durations.end()) {
        throw ValidationError("GrapeSettings: no duration configured for '" + key + "'");
    }
    return it->second;
}

ExperimentSpec ExperimentSpec::from_config(const Config& cfg) {
    ExperimentSpec spec;
    spec.system = system_params_from_config(cfg);

    spec.link.fiber_atten_db_per_km =
        cfg.get_double("link", "fiber_atten_db_per_km", spec.link.fiber_atten_db_per_km);
    spec.link.coax_atten_db_per_km =
        cfg.get_double("link", "coax_atten_db_per_km", spec.link.coax_atten_db_per_km);
    spec.link.length_km = cfg.get_double("link", "length_km", spec.link.length_km);
    spec.link.group_index = cfg.get_double("link", "group_index", spec.link.group_index);
    spec.link.conversion_gain =
        kTwoPi * 1e6 *
        cfg.get_double("link", "conversion_gain_mhz", spec.link.conversion_gain / (kTwoPi * 1e6));
    spec.link.linear_range_max =
        kTwoPi * 1e6 *
        cfg.get_double("link", "linear_range_max_mhz", spec.link.linear_range_max / (kTwoPi * 1e6));
    spec.link.crosstalk_db = cfg.get_double("link", "crosstalk_db", spec.link.crosstalk_db);
    spec.link.validate();

    spec.grape.amp_max =
        kTwoPi * 1e6 * cfg.get_double("grape", "amp_max_mhz", spec.grape.amp_max / (kTwoPi * 1e6));
    spec.grape.dt = 1e-9 * cfg.get_double("grape", "dt_ns", spec.grape.dt * 1e9);
    spec.grape.fock10_dt =
        1e-9 * cfg.get_double("grape", "fock10_dt_ns", spec.grape.fock10_dt * 1e9);
    spec.grape.max_iters =
        static_cast<int>(cfg.get_int("grape", "max_iters", spec.grape.max_iters));
    spec.grape.encode_target =
        cfg.get_double("grape", "encode_target", spec.grape.encode_target);
    spec.grape.prep_target = cfg.get_double("grape", "prep_target", spec.grape.prep_target);
    spec.grape.amplitude_penalty =
        cfg.get_double("grape", "amplitude_penalty", spec.grape.amplitude_penalty);
    spec.grape.derivative_penalty =
        cfg.get_double("grape", "derivative_penalty", spec.grape.derivative_penalty);
    for (auto& [key, value] : spec.grape.durations) {
        value = 1e-6 * cfg.get_double("grape", key + "_duration_us", value * 1e6);
    }

    spec.seed = static_cast<std::uint64_t>(cfg.get_int("harness", "seed", 1));
    spec.decoherence = cfg.get_bool("harness", "decoherence", spec.decoherence);
    spec.threads = static_cast<int>(cfg.get_int("harness", "threads", spec.threads));
    spec.iq_grid_points =
        static_cast<int>(cfg.get_int("harness", "iq_grid_points", spec.iq_grid_points));
    spec.iq_mod_max = cfg.get_double("harness", "iq_mod_max", spec.iq_mod_max);
    spec.wigner_points =
        static_cast<int>(cfg.get_int("harness", "wigner_points", spec.wigner_points));
    if (const auto v = cfg.get("harness", "rounds")) {
        spec.rounds_list.clear();
        for (const auto& item : split_list(*v)) spec.rounds_list.push_back(std::stoi(item));
    }
    if (const auto v = cfg.get("harness", "lengths_km")) {
        spec.sweep_lengths_km.clear();
        for (const auto& item : split_list(*v)) spec.sweep_lengths_km.push_back(std::stod(item));
    }
    if (const auto v = cfg.get("harness", "gallery_ns")) {
        spec.gallery_ns.clear();
        for (const auto& item : split_list(*v)) spec.gallery_ns.push_back(std::stoi(item));
    }
    return spec;
}

Config ExperimentSpec::to_config() const {
    Config cfg;
    system_params_to_config(system, cfg);
    cfg.set_double("link", "fiber_atten_db_per_km", link.fiber_atten_db_per_km);
    cfg.set_double("link", "coax_atten_db_per_km", link.coax_atten_db_per_km);
    cfg.set_double("link", "length_km", link.length_km);
    cfg.set_double("link", "group_index", link.group_index);
    cfg.set_double("link", "conversion_gain_mhz", link.conversion_gain / (kTwoPi * 1e6));
    cfg.set_double("link", "linear_range_max_mhz", link.linear_range_max / (kTwoPi * 1e6));
    cfg.set("link", "crosstalk_db", std::isinf(link.crosstalk_db) ? "-inf"
                                                                  : format_double(link.crosstalk_db));
    cfg.set_double("grape", "amp_max_mhz", grape.amp_max / (kTwoPi * 1e6));
    cfg.set_double("grape", "dt_ns", grape.dt * 1e9);
    cfg.set_double("grape", "fock10_dt_ns", grape.fock10_dt * 1e9);
    cfg.set("grape", "max_iters", std::to_string(grape.max_iters));
    cfg.set_double("grape", "encode_target", grape.encode_target);
    cfg.set_double("grape", "prep_target", grape.prep_target);
    cfg.set_double("grape", "amplitude_penalty", grape.amplitude_penalty);
    cfg.set_double("grape", "derivative_penalty", grape.derivative_penalty);
    for (const auto& [key, value] : grape.durations) {
        cfg.set_double("grape", key + "_duration_us", value * 1e6);
    }
    cfg.set("harness", "seed", std::to_string(seed));
    cfg.set("harness", "decoherence", decoherence ? "on" : "off");
    cfg.set("harness", "threads", std::to_string(threads));
    cfg.set("harness", "iq_grid_points", std::to_string(iq_grid_points));
    cfg.set_double("harness", "iq_mod_max", iq_mod_max);
    cfg.set("harness", "wigner_points", std::to_string(wigner_points));
    std::ostringstream rounds;
    for (std::size_t i = 0; i < rounds_list.size(); ++i) {
        rounds << (i ? "," : "") << rounds_list[i];
    }
    cfg.set("harness", "rounds", rounds.str());
    std::ostringstream lengths;
    for (std::size_t i = 0; i < sweep_lengths_km.size(); ++i) {
        lengths << (i ? "," : "") << format_double(sweep_lengths_km[i]);
    }
    cfg.set("harness", "lengths_km", lengths.str());
    std::ostringstream ns;
    for (std::size_t i = 0; i < gallery_ns.size(); ++i) ns << (i ? "," : "") << gallery_ns[i];
    cfg.set("harness", "gallery_ns", ns.str());
    return cfg;
}

std::uint64_t ExperimentSpec::config_hash() const { return fnv1a64(to_config().serialize()); }

std::string metadata_header(const ExperimentSpec& spec) {
    std::ostringstream out;
    char hash_hex[20];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(spec.config_hash()));
    out << "# artifact_version=" << kVersion << "\n";
    out << "# config_hash=" << hash_hex << "\n";
    out << "# seed=" << spec.seed << "\n";
    out << "# assumed=" << SystemParams::assumed_keys() << "\n";
    return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path);
    out << content;
}

void write_csv(const ExperimentSpec& spec, const std::string& filename,
               const std::string& payload) {
    write_text_file(spec.out_dir + "/" + filename, metadata_header(spec) + payload);
}

// --- pulse cache -------------------------------------------------------------------

namespace {

std::string role_name(PulseRole role) {
    switch (role) {
        case PulseRole::Encode: return "encode";
        case PulseRole::Decode: return "decode";
        default: return "prep";
    }
}

GrapeOptions optimizer_options(const ExperimentSpec& spec, double target,
                               const std::string& tag) {
    GrapeOptions opt;
    opt.max_iters = spec.grape.max_iters;
    opt.target_fidelity = target;
    opt.seed = mix_seed(spec.seed, tag);
    opt.threads = spec.threads;
    opt.step_rule = StepRule::Lbfgs; // quasi-Newton converges in far fewer iterates
    return opt;
}

std::string problem_fingerprint(const ExperimentSpec& spec, const GrapeProblem& problem,
                                const std::string& tag) {
    std::ostringstream key;
    key << "tag=" << tag << ";N=" << problem.config.cavity_dim
        << ";dur=" << format_double(problem.duration) << ";dt=" << format_double(problem.dt)
        << ";amp=" << format_double(problem.amp_max)
        << ";wa=" << format_double(problem.penalties.amplitude_weight)
        << ";wd=" << format_double(problem.penalties.derivative_weight)
        << ";chi=" << format_double(spec.system.chi_sq)
        << ";kerr=" << format_double(spec.system.kerr_g)
        << ";iters=" << problem.options.max_iters
        << ";target=" << format_double(problem.options.target_fidelity)
        << ";seed=" << problem.options.seed
        << ";init=" << format_double(problem.options.init_scale) << ";v=1";
    for (const auto& s : problem.target_states) {
        for (int i = 0; i < s.amplitudes.size(); ++i) {
            if (std::abs(s.amplitudes(i)) > 1e-14) {
                key << ";t" << i << "=" << format_double(s.amplitudes(i).real()) << "+"
                    << format_double(s.amplitudes(i).imag());
            }
        }
    }
    return key.str();
}

SynthesizedPulse synthesize_with_cache(const ExperimentSpec& spec, GrapeProblem problem,
                                       const std::string& tag,
                                       const ControlPulse* initial = nullptr) {
    std::string fingerprint = problem_fingerprint(spec, problem, tag);
    if (initial) fingerprint += ";ws=1";
    char hash_hex[20];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(fingerprint)));
    const std::string base = spec.cache_path() + "/" + tag + "_" + hash_hex;
    const std::string pulse_path = base + ".csv";
    const std::string meta_path = base + ".json";

    SynthesizedPulse out;
    out.cache_key = hash_hex;

    if (fs::exists(pulse_path) && fs::exists(meta_path)) {
        std::ifstream pin(pulse_path);
        std::stringstream pbuf;
        pbuf << pin.rdbuf();
        out.pulse = ControlPulse::from_csv(pbuf.str());
        std::ifstream min(meta_path);
        const auto meta = nlohmann::json::parse(min);
        out.iterations = meta.at("iterations").get<int>();
        out.converged = meta.at("converged").get<bool>();
        out.from_cache = true;
    } else {
        const GrapeResult result = initial ? optimize(problem, *initial) : optimize(problem);
        write_text_file(pulse_path, result.pulse.to_csv());
        nlohmann::json meta;
        meta["fingerprint"] = fingerprint;
        meta["fidelity"] = result.final_fidelity;
        meta["iterations"] = result.iterations;
        meta["converged"] = result.converged;
        meta["stop_reason"] = result.stop_reason;
        write_text_file(meta_path, meta.dump(2) + "\n");
        write_text_file(spec.cache_path() + "/" + tag + "_" + hash_hex + "_history.csv",
                        result.history_csv());
        // Reload through the CSV so in-memory and cached runs see the same
        // quantized pulse (byte-identical downstream outputs).
        std::ifstream pin(pulse_path);
        std::stringstream pbuf;
        pbuf << pin.rdbuf();
        out.pulse = ControlPulse::from_csv(pbuf.str());
        out.iterations = result.iterations;
        out.converged = result.converged;
    }
    out.fidelity = objective_parts(problem, out.pulse).fidelity;
    return out;
}

} // namespace

SynthesizedPulse synthesize_encode(const ExperimentSpec& spec, const EncodeSpec& target,
                                   PulseRole role) {
    const HilbertConfig config = HilbertConfig::for_max_photon(target.max_photon());
    const double duration = spec.grape.duration_for(target.name());
    GrapeProblem problem =
        role == PulseRole::Decode
            ? make_decode_problem(target, spec.system, config, duration, spec.grape.dt)
            : make_encode_problem(target, spec.system, config, duration, spec.grape.dt);
    problem.amp_max = spec.grape.amp_max;
    problem.penalties.amplitude_weight = spec.grape.amplitude_penalty;
    problem.penalties.derivative_weight = spec.grape.derivative_penalty;
    const std::string tag = role_name(role) + "_" + target.name();
    problem.options = optimizer_options(spec, spec.grape.encode_target, tag);
    return synthesize_with_cache(spec, std::move(problem), tag);
}

SynthesizedPulse synthesize_prep(const ExperimentSpec& spec, const Vector& cavity_target,
                                 const std::string& name) {
    // Size the space from the target's significant support (guard band on
    // top); sub-1e-3 amplitude tails are dropped when embedding.
    int top = 0;
    double mean_photon = 0.0;
    for (int k = 0; k < cavity_target.size(); ++k) {
        if (std::abs(cavity_target(k)) > 1e-3) top = k;
        mean_photon += k * std::norm(cavity_target(k));
    }
    mean_photon /= cavity_target.squaredNorm();
    const HilbertConfig config = HilbertConfig::for_max_photon(top);
    Vector embedded = Vector::Zero(config.cavity_dim);
    for (int k = 0; k <= top && k < cavity_target.size(); ++k) {
        embedded(k) = cavity_target(k);
    }
    const double dt = (top >= 8) ? spec.grape.fock10_dt : spec.grape.dt;
    const double duration =
        spec.grape.durations.count(name) ? spec.grape.duration_for(name)
                                         : spec.grape.duration_for("fock10");
    GrapeProblem problem = make_state_prep_problem(embedded, spec.system, config,
                                                   duration, dt);
    problem.amp_max = spec.grape.amp_max;
    problem.penalties.amplitude_weight = spec.grape.amplitude_penalty;
    problem.penalties.derivative_weight = spec.grape.derivative_penalty;
    const std::string tag = "prep_" + name;
    problem.options = optimizer_options(spec, spec.grape.prep_target, tag);

    // Small random pulses leave a deep Fock target with |<t|U|i>| ~ 0 and the
    // |.|^2 objective has no gradient there. Warm-start with a displacement
    // ramp to the target's mean photon number so the overlap is finite.
    ControlPulse init = ControlPulse::zero(problem.dt, problem.n_segments());
    {
        std::mt19937_64 rng(problem.options.seed);
        std::uniform_real_distribution<double> dist(
            -problem.options.init_scale * problem.amp_max,
            problem.options.init_scale * problem.amp_max);
        for (int k = 0; k < init.n_segments(); ++k) {
            for (int j = 0; j < ControlPulse::kChannels; ++j) init.segments(k, j) = dist(rng);
        }
        if (mean_photon > 0.5) {
            const int ramp = std::max(1, init.n_segments() / 12);
            const double amp =
                std::min(0.8 * problem.amp_max,
                         2.0 * std::sqrt(mean_photon) / (ramp * problem.dt));
            for (int k = 0; k < ramp; ++k) init.segments(k, 2) += amp;
        }
    }
    return synthesize_with_cache(spec, std::move(problem), tag, &init);
}

// --- experiments ----------------------------------------------------------------------

namespace {

double excited_population(const QuantumState& psi) {
    double pe = 0.0;
    for (int n = 0; n < psi.config.cavity_dim; ++n) {
        pe += std::norm(psi.amplitudes(psi.config.index(1, n)));
    }
    return pe;
}

// Gaussian envelope with unit peak, centered on the pulse window.
Eigen::VectorXd gaussian_envelope(int segments, double dt, double sigma) {
    Eigen::VectorXd env(segments);
    const double mid = segments * dt / 2.0;
    for (int k = 0; k < segments; ++k) {
        const double t = (k + 0.5) * dt - mid;
        env(k) = std::exp(-t * t / (2.0 * sigma * sigma));
    }
    return env;
}

double iq_scan_pe(const ExperimentSpec& spec, const Operator& h0, const DriveOperators& drives,
                  const QuantumState& ground, const Eigen::VectorXd& envelope, double dt,
                  double mod_i, double mod_q) {
    ControlPulse pulse = ControlPulse::zero(dt, static_cast<int>(envelope.size()));
    pulse.segments.col(0) = envelope * (mod_i * spec.link.conversion_gain);
    pulse.segments.col(1) = envelope * (mod_q * spec.link.conversion_gain);
    const ControlPulse through = apply_link(pulse, spec.link, /*recalibrate=*/false);
    const auto result = propagate_unitary(h0, drives, through, ground);
    return excited_population(*result.final_state);
}

} // namespace

RabiIqSummary run_rabi_iq_scan(const ExperimentSpec& spec) {
    const HilbertConfig config(4); // cavity stays in vacuum; qubit-only drive
    const Operator h0 = drift_hamiltonian(spec.system, FrameSpec::resonant(spec.system), config);
    const DriveOperators drives = drive_hamiltonians(config);
    const QuantumState ground = basis_state(config, 0, 0);

    const double sigma = 60e-9; // pulse width from the device characterization
    const double dt = 2e-9;
    const int segments = static_cast<int>(std::lround(6.0 * sigma / dt));
    const Eigen::VectorXd envelope = gaussian_envelope(segments, dt, sigma);

    const int points = spec.iq_grid_points;
    Eigen::MatrixXd pe(points, points);
    parallel_for(points, spec.threads, [&](int qi) {
        const double mod_q = -spec.iq_mod_max + 2.0 * spec.iq_mod_max * qi / (points - 1);
        for (int ii = 0; ii < points; ++ii) {
            const double mod_i = -spec.iq_mod_max + 2.0 * spec.iq_mod_max * ii / (points - 1);
            pe(qi, ii) = iq_scan_pe(spec, h0, drives, ground, envelope, dt, mod_i, mod_q);
        }
    });

    std::ostringstream csv;
    csv << "mod_I,mod_Q,P_e\n";
    for (int qi = 0; qi < points; ++qi) {
        const double mod_q = -spec.iq_mod_max + 2.0 * spec.iq_mod_max * qi / (points - 1);
        for (int ii = 0; ii < points; ++ii) {
            const double mod_i = -spec.iq_mod_max + 2.0 * spec.iq_mod_max * ii / (points - 1);
            csv << format_double(mod_i) << "," << format_double(mod_q) << ","
                << format_double(pe(qi, ii)) << "\n";
        }
    }
    write_csv(spec, "rabi_iq_scan.csv", csv.str());

    RabiIqSummary summary;
    summary.origin_pe = iq_scan_pe(spec, h0, drives, ground, envelope, dt, 0.0, 0.0);
    for (const double frac : {0.25, 0.5, 0.75, 1.0}) {
        const double r = frac * spec.iq_mod_max;
        const double ref = iq_scan_pe(spec, h0, drives, ground, envelope, dt, r, 0.0);
        for (int a = 1; a < 8; ++a) {
            const double theta = kTwoPi * a / 8.0;
            const double v = iq_scan_pe(spec, h0, drives, ground, envelope, dt,
                                        r * std::cos(theta), r * std::sin(theta));
            summary.max_angular_deviation =
                std::max(summary.max_angular_deviation, std::abs(v - ref));
        }
    }
    return summary;
}

RabiScanResult run_rabi_transfer(const ExperimentSpec& spec) {
    const HilbertConfig config(4);
    std::vector<double> amplitudes;
    for (int k = 0; k <= 10; ++k) amplitudes.push_back(spec.iq_mod_max * k / 10.0);
    const RabiScanResult result =
        rabi_transfer_scan(spec.link, amplitudes, spec.system, config, 2e-6, 2e-9);

    std::ostringstream csv;
    csv << "mod_amplitude,rabi_frequency_mhz,fit_residual\n";
    for (const auto& p : result.points) {
        csv << format_double(p.modulation_amplitude) << ","
            << format_double(p.rabi_frequency / (kTwoPi * 1e6)) << ","
            << format_double(p.fit_residual) << "\n";
    }
    csv << "# slope_mhz_per_unit=" << format_double(result.slope / (kTwoPi * 1e6)) << "\n";
    csv << "# r_squared=" << format_double(result.r_squared) << "\n";
    write_csv(spec, "rabi_transfer.csv", csv.str());
    return result;
}

DisplacementCalSummary run_displacement_calibration(const ExperimentSpec& spec) {
    // N = 20 keeps the Poisson tail of the largest displacement (nbar ~ 4.8)
    // below 1e-6, so the fit residuals reflect physics rather than truncation.
    const HilbertConfig config(20);
    const Operator h0 = drift_hamiltonian(spec.system, FrameSpec::resonant(spec.system), config);
    const DriveOperators drives = drive_hamiltonians(config);
    const QuantumState ground = basis_state(config, 0, 0);
    const double t_pulse = 200e-9;
    const double dt = 2e-9;

    std::vector<double> mods;
    for (int k = 0; k <= 10; ++k) mods.push_back(3.5 * k / 10.0);

    std::ostringstream dist_csv, cal_csv;
    dist_csv << "mod_amplitude,n,P_n\n";
    cal_csv << "mod_amplitude,alpha_fit,nbar,poisson_max_dev\n";

    DisplacementCalSummary summary;
    std::vector<double> xs, ys;
    for (const double mod : mods) {
        ControlPulse pulse = ControlPulse::zero(dt, static_cast<int>(std::lround(t_pulse / dt)));
        pulse.segments.col(2).setConstant(mod * spec.link.conversion_gain);
        const ControlPulse through = apply_link(pulse, spec.link, /*recalibrate=*/false);
        const auto result = propagate_unitary(h0, drives, through, ground);
        const PhotonDistribution dist = photon_distribution(
            *result.final_state, PhotonMeasurementMode::Ideal, spec.system);
        for (int n = 0; n < config.cavity_dim; ++n) {
            dist_csv << format_double(mod) << "," << n << ","
                     << format_double(dist.probabilities(n)) << "\n";
        }
        const double nbar = dist.mean();
        const double alpha = std::sqrt(nbar);
        const double dev = dist.poisson_deviation();
        summary.max_poisson_deviation = std::max(summary.max_poisson_deviation, dev);
        cal_csv << format_double(mod) << "," << format_double(alpha) << ","
                << format_double(nbar) << "," << format_double(dev) << "\n";
        xs.push_back(mod);
        ys.push_back(alpha);
    }
    summary.alpha_fit = linear_fit(xs, ys);
    cal_csv << "# slope_alpha_per_unit=" << format_double(summary.alpha_fit.slope) << "\n";
    cal_csv << "# r_squared=" << format_double(summary.alpha_fit.r_squared) << "\n";
    write_csv(spec, "displacement_distributions.csv", dist_csv.str());
    write_csv(spec, "displacement_calibration.csv", cal_csv.str());
    return summary;
}

namespace {

QuantumState qubit_cavity_input(const HilbertConfig& config, Complex g_amp, Complex e_amp) {
    Vector v = Vector::Zero(config.total_dim());
    v(config.index(0, 0)) = g_amp;
    v(config.index(1, 0)) = e_amp;
    return QuantumState(v, config);
}

} // namespace

GallerySummary run_fock_gallery(const ExperimentSpec& spec) {
    GallerySummary summary;
    std::ostringstream table;
    table << "state,n,pulse_fidelity,prep_fidelity,prep_fidelity_open,symmetry_asymmetry\n";

    for (const int n : spec.gallery_ns) {
        const EncodeSpec target{EncodeBasis::Fock, n};
        const SynthesizedPulse enc = synthesize_encode(spec, target, PulseRole::Encode);
        const HilbertConfig config = HilbertConfig::for_max_photon(n);
        const Operator h0 =
            drift_hamiltonian(spec.system, FrameSpec::resonant(spec.system), config);
        const DriveOperators drives = drive_hamiltonians(config);
        const auto collapse = collapse_operators(spec.system, config);
        const ControlPulse pulse = apply_link(enc.pulse, spec.link, /*recalibrate=*/true);
        const double extent =
            std::floor(std::sqrt(static_cast<double>(config.cavity_dim - 6)) * 100.0) / 100.0;
        const WignerGrid grid{extent, spec.wigner_points};

        const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
        struct Case {
            std::string name;
            QuantumState input;
            Vector cavity_target;
        };
        Vector fock_target = Vector::Zero(config.cavity_dim);
        fock_target(n) = 1.0;
        Vector sup_target = Vector::Zero(config.cavity_dim);
        sup_target(0) = inv_sqrt2;
        sup_target(n) = Complex(0.0, inv_sqrt2);
        const std::vector<Case> cases = {
            {"fock" + std::to_string(n), basis_state(config, 1, 0), fock_target},
            {"sup" + std::to_string(n),
             qubit_cavity_input(config, inv_sqrt2, Complex(0.0, inv_sqrt2)), sup_target},
        };

        for (const auto& c : cases) {
            GalleryEntry entry;
            entry.state = c.name;
            entry.n = n;
            entry.pulse_fidelity = enc.fidelity;

            const QuantumState ideal = cavity_state(config, c.cavity_target);
            const auto closed = propagate_unitary(h0, drives, pulse, c.input);
            entry.prep_fidelity = fidelity_state(*closed.final_state, ideal);
            const Matrix rho_closed =
                partial_trace_qubit(pure_density(*closed.final_state).matrix, config);
            write_csv(spec, "wigner_" + c.name + ".csv",
                      wigner_cavity(rho_closed, config, grid, spec.threads).to_csv());

            if (spec.decoherence) {
                const auto open = propagate_lindblad(h0, drives, pulse, pure_density(c.input),
                                                     collapse);
                entry.prep_fidelity_open = fidelity_state(ideal, *open.final_density);
                const Matrix rho_open = partial_trace_qubit(open.final_density->matrix, config);
                write_csv(spec, "wigner_" + c.name + "_open.csv",
                          wigner_cavity(rho_open, config, grid, spec.threads).to_csv());
            }

            if (c.name.rfind("sup", 0) == 0) {
                const Matrix rho_ideal =
                    partial_trace_qubit(pure_density(ideal).matrix, config);
                const WignerGrid check_grid{extent * 0.85, 17};
                entry.symmetry_asymmetry = wigner_rotation_asymmetry(rho_ideal, config,
                                                                     check_grid, n, spec.threads);
            }
            table << entry.state << "," << entry.n << "," << format_double(entry.pulse_fidelity)
                  << "," << format_double(entry.prep_fidelity) << ","
                  << format_double(entry.prep_fidelity_open) << ","
                  << format_double(entry.symmetry_asymmetry) << "\n";
            summary.entries.push_back(std::move(entry));
        }
    }
    write_csv(spec, "fock_gallery.csv", table.str());
    return summary;
}

RoundsSummary run_rounds_benchmark(const ExperimentSpec& spec) {
    RoundsSummary summary;
    std::ostringstream csv;
    csv << "basis,rounds,process_fidelity,fitted_F1,decoherence_flag,length_km\n";
    for (const int n : spec.gallery_ns) {
        const EncodeSpec target{EncodeBasis::Fock, n};
        const SynthesizedPulse enc = synthesize_encode(spec, target, PulseRole::Encode);
        const SynthesizedPulse dec = synthesize_encode(spec, target, PulseRole::Decode);
        const HilbertConfig config = HilbertConfig::for_max_photon(n);

        ProcessBenchmarkOptions opts;
        opts.decoherence = spec.decoherence;
        opts.link = spec.link;
        opts.threads = spec.threads;
        const auto results = process_benchmark(enc.pulse, dec.pulse, spec.rounds_list,
                                               spec.system, config, opts);
        for (const auto& r : results) {
            csv << target.name() << "," << r.rounds << "," << format_double(r.process_fidelity)
                << "," << format_double(r.fitted_single_round_fidelity) << ","
                << (r.decoherence ? 1 : 0) << "," << format_double(r.length_km) << "\n";
        }
        summary.curves[target.name()] = results;
    }
    write_csv(spec, "rounds_benchmark.csv", csv.str());
    return summary;
}

SweepSummary run_distance_sweep(const ExperimentSpec& spec) {
    SweepSummary summary;
    std::ostringstream csv, detail;
    csv << "basis,length_km,decoherence_flag,fitted_F1,delay_us\n";
    detail << "basis,length_km,decoherence_flag,rounds,process_fidelity,fitted_F1\n";

    const std::vector<EncodeSpec> bases = {{EncodeBasis::Fock, 1}, {EncodeBasis::Binomial, 0}};
    for (const auto& basis : bases) {
        const SynthesizedPulse enc = synthesize_encode(spec, basis, PulseRole::Encode);
        const SynthesizedPulse dec = synthesize_encode(spec, basis, PulseRole::Decode);
        const HilbertConfig config = HilbertConfig::for_max_photon(basis.max_photon());

        for (const double length : spec.sweep_lengths_km) {
            LinkParams link = spec.link;
            link.length_km = length;
            const double delay_us =
                link_response(link, LinkMedium::Fiber, length).delay_s * 1e6;

            std::vector<bool> modes = {false};
            if (spec.decoherence) modes.push_back(true);
            for (const bool open : modes) {
                ProcessBenchmarkOptions opts;
                opts.decoherence = open;
                opts.link = link;
                opts.recalibrate_link = true;
                opts.threads = spec.threads;
                const auto results = process_benchmark(enc.pulse, dec.pulse, spec.rounds_list,
                                                       spec.system, config, opts);
                for (const auto& r : results) {
                    detail << basis.name() << "," << format_double(length) << ","
                           << (open ? 1 : 0) << "," << r.rounds << ","
                           << format_double(r.process_fidelity) << ","
                           << format_double(r.fitted_single_round_fidelity) << "\n";
                }
                SweepEntry entry;
                entry.basis = basis.name();
                entry.length_km = length;
                entry.decoherence = open;
                entry.fitted_f1 = results.front().fitted_single_round_fidelity;
                entry.delay_us = delay_us;
                csv << entry.basis << "," << format_double(length) << "," << (open ? 1 : 0)
                    << "," << format_double(entry.fitted_f1) << "," << format_double(delay_us)
                    << "\n";
                summary.entries.push_back(std::move(entry));
            }
        }
    }
    write_csv(spec, "distance_sweep.csv", csv.str());
    write_csv(spec, "distance_sweep_rounds.csv", detail.str());
    return summary;
}

namespace {

void write_rho_json(const ExperimentSpec& spec, const std::string& filename, const Matrix& rho) {
    auto j = nlohmann::json::parse(matrix_to_json(rho));
    char hash_hex[20];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(spec.config_hash()));
    j["artifact_version"] = kVersion;
    j["config_hash"] = hash_hex;
    j["assumed"] = SystemParams::assumed_keys();
    write_text_file(spec.out_dir + "/" + filename, j.dump(2) + "\n");
}

} // namespace

Fock10Summary run_fock10(const ExperimentSpec& spec) {
    const HilbertConfig config = HilbertConfig::for_max_photon(10);
    Vector fock10 = Vector::Zero(config.cavity_dim);
    fock10(10) = 1.0;
    Vector sup = Vector::Zero(config.cavity_dim);
    sup(0) = 1.0 / std::sqrt(2.0);
    sup(10) = Complex(0.0, 1.0 / std::sqrt(2.0));

    const SynthesizedPulse prep = synthesize_prep(spec, fock10, "fock10");
    const SynthesizedPulse prep_sup = synthesize_prep(spec, sup, "fock10_sup");

    const Operator h0 = drift_hamiltonian(spec.system, FrameSpec::resonant(spec.system), config);
    const DriveOperators drives = drive_hamiltonians(config);
    const QuantumState ground = basis_state(config, 0, 0);

    Fock10Summary summary;
    const QuantumState ideal_fock = cavity_state(config, fock10);
    const QuantumState ideal_sup = cavity_state(config, sup);

    const auto run_fock = propagate_unitary(
        h0, drives, apply_link(prep.pulse, spec.link, true), ground);
    const auto run_sup = propagate_unitary(
        h0, drives, apply_link(prep_sup.pulse, spec.link, true), ground);
    summary.prep_fidelity = fidelity_state(*run_fock.final_state, ideal_fock);
    summary.sup_prep_fidelity = fidelity_state(*run_sup.final_state, ideal_sup);

    const double extent = 3.4;
    const WignerGrid grid{extent, spec.wigner_points};
    const Matrix rho_prep =
        partial_trace_qubit(pure_density(*run_fock.final_state).matrix, config);
    const Matrix rho_prep_sup =
        partial_trace_qubit(pure_density(*run_sup.final_state).matrix, config);
    const Matrix rho_ideal = partial_trace_qubit(pure_density(ideal_fock).matrix, config);
    const Matrix rho_ideal_sup = partial_trace_qubit(pure_density(ideal_sup).matrix, config);

    const WignerMap map_prep = wigner_cavity(rho_prep, config, grid, spec.threads);
    const WignerMap map_ideal = wigner_cavity(rho_ideal, config, grid, spec.threads);
    write_csv(spec, "fock10_wigner.csv", map_prep.to_csv());
    write_csv(spec, "fock10_wigner_ideal.csv", map_ideal.to_csv());
    write_csv(spec, "fock10_sup_wigner.csv",
              wigner_cavity(rho_prep_sup, config, grid, spec.threads).to_csv());
    write_csv(spec, "fock10_sup_wigner_ideal.csv",
              wigner_cavity(rho_ideal_sup, config, grid, spec.threads).to_csv());

    summary.ring_sign_changes_ideal = map_ideal.radial_sign_changes();
    summary.ring_sign_changes_prepared = map_prep.radial_sign_changes();
    summary.sup_symmetry_asymmetry = wigner_rotation_asymmetry(
        rho_ideal_sup, config, WignerGrid{3.2, 21}, 10, spec.threads);

    // Synthetic Wigner tomography of the prepared state, then MLE.
    const auto records = parity_records_from_state(rho_prep, WignerGrid{3.2, 21});
    MleOptions mle_opts;
    mle_opts.dim = config.cavity_dim;
    const MleResult mle = mle_reconstruct(records, config, mle_opts);
    summary.mle_fidelity = fidelity_matrices(mle.rho, rho_prep);
    for (std::size_t i = 1; i < mle.loglik_history.size(); ++i) {
        summary.mle_loglik_monotone_violation =
            std::max(summary.mle_loglik_monotone_violation,
                     mle.loglik_history[i - 1] - mle.loglik_history[i]);
    }
    write_rho_json(spec, "fock10_rho.json", mle.rho);

    std::ostringstream report;
    report << "metric,value\n";
    report << "prep_fidelity," << format_double(summary.prep_fidelity) << "\n";
    report << "sup_prep_fidelity," << format_double(summary.sup_prep_fidelity) << "\n";
    report << "ring_sign_changes_ideal," << summary.ring_sign_changes_ideal << "\n";
    report << "ring_sign_changes_prepared," << summary.ring_sign_changes_prepared << "\n";
    report << "sup_symmetry_asymmetry," << format_double(summary.sup_symmetry_asymmetry) << "\n";
    report << "mle_fidelity," << format_double(summary.mle_fidelity) << "\n";
    report << "mle_iterations," << mle.iterations << "\n";
    write_csv(spec, "fock10_summary.csv", report.str());
    return summary;
}

Matrix named_cavity_state(const std::string& name, const HilbertConfig& config) {
    const int n = config.cavity_dim;
    const auto colon = name.find(':');
    const std::string kind = name.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : name.substr(colon + 1);
    Vector v = Vector::Zero(n);
    if (kind == "vac") {
        v(0) = 1.0;
    } else if (kind == "fock") {
        const int level = std::stoi(arg);
        if (level < 0 || level >= n) throw ValidationError("named state: Fock level out of range");
        v(level) = 1.0;
    } else if (kind == "coh") {
        const auto comma = arg.find(',');
        const double re = std::stod(arg.substr(0, comma));
        const double im = comma == std::string::npos ? 0.0 : std::stod(arg.substr(comma + 1));
        const Operator d = displacement(Complex(re, im), config);
        Vector vac = Vector::Zero(n);
        vac(0) = 1.0;
        v = d.matrix * vac;
    } else if (kind == "sup") {
        const auto comma = arg.find(',');
        if (comma == std::string::npos) throw ValidationError("named state: sup needs two levels");
        const int a = std::stoi(arg.substr(0, comma));
        const int b = std::stoi(arg.substr(comma + 1));
        if (a < 0 || a >= n || b < 0 || b >= n) {
            throw ValidationError("named state: sup level out of range");
        }
        v(a) = 1.0 / std::sqrt(2.0);
        v(b) += Complex(0.0, 1.0 / std::sqrt(2.0));
    } else {
        throw ValidationError("named state: unknown kind '" + kind + "'");
    }
    v /= v.norm();
    return v * v.adjoint();
}

} // namespace boslink
