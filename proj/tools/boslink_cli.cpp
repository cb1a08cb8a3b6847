// boslink — command-line front end for the optically linked bosonic-processor
// simulator. Subcommands reproduce the device experiments as CSV/JSON files.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "boslink/harness.hpp"
#include "boslink/version.hpp"

namespace {

using namespace boslink;

struct GlobalArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    std::string decoherence = "on";
    double length_km = -1.0;
    int threads = 2;
};

ExperimentSpec build_spec(const GlobalArgs& args) {
    Config cfg;
    if (!args.config_path.empty()) cfg = Config::load(args.config_path);
    ExperimentSpec spec = ExperimentSpec::from_config(cfg);
    spec.out_dir = args.out_dir;
    spec.seed = args.seed;
    spec.threads = args.threads;
    if (args.decoherence == "on") {
        spec.decoherence = true;
    } else if (args.decoherence == "off") {
        spec.decoherence = false;
    } else {
        throw ValidationError("--decoherence must be 'on' or 'off'");
    }
    if (args.length_km >= 0.0) spec.link.length_km = args.length_km;
    return spec;
}

void echo_run_config(const ExperimentSpec& spec) {
    write_text_file(spec.out_dir + "/run_config.ini", spec.to_config().serialize());
}

int convergence_exit(bool converged) { return converged ? 0 : 3; }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"pulse-level simulator and optimal-control toolkit for an optically "
                 "linked transmon-cavity processor"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    GlobalArgs args;
    app.add_option("--config", args.config_path, "config file (INI dialect)");
    app.add_option("--out", args.out_dir, "output directory");
    app.add_option("--seed", args.seed, "random seed");
    app.add_option("--decoherence", args.decoherence, "decoherence on|off")
        ->check(CLI::IsMember({"on", "off"}));
    app.add_option("--length-km", args.length_km, "override link length (km)");
    app.add_option("--threads", args.threads, "worker threads");

    auto* cmd_budget = app.add_subcommand("link-budget", "fiber/coax budget vs distance");
    double budget_max_km = 15.0;
    int budget_points = 31;
    cmd_budget->add_option("--max-km", budget_max_km, "maximum length");
    cmd_budget->add_option("--points", budget_points, "number of lengths");

    auto* cmd_rabi = app.add_subcommand("rabi-scan", "IQ-plane Rabi scan and transfer linearity");
    auto* cmd_disp = app.add_subcommand("displace-cal", "displacement amplitude calibration");

    auto* cmd_synth = app.add_subcommand("grape-synth", "synthesize one encode/decode pulse pair");
    std::string synth_target = "fock1";
    cmd_synth->add_option("--target", synth_target,
                          "encode target: fock<N> or binomial");

    auto* cmd_gallery = app.add_subcommand("fock-gallery", "Fock/superposition Wigner gallery");
    auto* cmd_rounds = app.add_subcommand("rounds-bench", "encode/decode rounds benchmark");
    auto* cmd_sweep = app.add_subcommand("distance-sweep", "0-15 km fiber distance sweep");
    auto* cmd_fock10 = app.add_subcommand("fock10", "Fock |10> preparation and reconstruction");

    auto* cmd_wigner = app.add_subcommand("wigner", "Wigner map of a named state or rho JSON");
    std::string wigner_state = "fock:1";
    std::string wigner_rho_path;
    int wigner_dim = 12;
    double wigner_extent = 2.4;
    int wigner_points = 81;
    cmd_wigner->add_option("--state", wigner_state, "named state: vac, fock:N, coh:RE[,IM], sup:A,B");
    cmd_wigner->add_option("--rho", wigner_rho_path, "density-matrix JSON file");
    cmd_wigner->add_option("--dim", wigner_dim, "cavity dimension for named states");
    cmd_wigner->add_option("--extent", wigner_extent, "grid extent");
    cmd_wigner->add_option("--points", wigner_points, "grid points per axis");

    auto* cmd_recon = app.add_subcommand("reconstruct", "MLE state reconstruction from parity CSV");
    std::string recon_input;
    int recon_dim = 12;
    cmd_recon->add_option("--input", recon_input, "CSV with re_alpha,im_alpha,parity rows")
        ->required();
    cmd_recon->add_option("--dim", recon_dim, "reconstruction dimension");

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentSpec spec = build_spec(args);
        echo_run_config(spec);

        if (cmd_budget->parsed()) {
            std::vector<double> lengths;
            for (int k = 0; k < budget_points; ++k) {
                lengths.push_back(budget_max_km * k / std::max(1, budget_points - 1));
            }
            auto rows = link_budget(spec.link, LinkMedium::Fiber, lengths);
            const auto coax = link_budget(spec.link, LinkMedium::Coax, lengths);
            rows.insert(rows.end(), coax.begin(), coax.end());
            write_csv(spec, "link_budget.csv", link_budget_csv(rows));
            std::printf("link-budget: %zu rows -> %s/link_budget.csv\n", rows.size(),
                        spec.out_dir.c_str());
            return 0;
        }
        if (cmd_rabi->parsed()) {
            const RabiIqSummary iq = run_rabi_iq_scan(spec);
            const RabiScanResult transfer = run_rabi_transfer(spec);
            std::printf("rabi-scan: angular deviation %.3g, linear fit R^2 %.6f\n",
                        iq.max_angular_deviation, transfer.r_squared);
            return 0;
        }
        if (cmd_disp->parsed()) {
            const DisplacementCalSummary cal = run_displacement_calibration(spec);
            std::printf("displace-cal: slope %.4f /unit, R^2 %.6f, max Poisson dev %.3g\n",
                        cal.alpha_fit.slope, cal.alpha_fit.r_squared,
                        cal.max_poisson_deviation);
            return 0;
        }
        if (cmd_synth->parsed()) {
            EncodeSpec target;
            if (synth_target == "binomial") {
                target.basis = EncodeBasis::Binomial;
            } else if (synth_target.rfind("fock", 0) == 0) {
                target.basis = EncodeBasis::Fock;
                target.n = std::stoi(synth_target.substr(4));
            } else {
                throw ValidationError("unknown synth target: " + synth_target);
            }
            const SynthesizedPulse enc = synthesize_encode(spec, target, PulseRole::Encode);
            const SynthesizedPulse dec = synthesize_encode(spec, target, PulseRole::Decode);
            write_csv(spec, "pulse_encode_" + target.name() + ".csv", enc.pulse.to_csv());
            write_csv(spec, "pulse_decode_" + target.name() + ".csv", dec.pulse.to_csv());
            std::printf("grape-synth %s: encode F=%.6f (%s), decode F=%.6f (%s)\n",
                        target.name().c_str(), enc.fidelity,
                        enc.from_cache ? "cache" : "optimized", dec.fidelity,
                        dec.from_cache ? "cache" : "optimized");
            return convergence_exit(enc.converged && dec.converged);
        }
        if (cmd_gallery->parsed()) {
            const GallerySummary gallery = run_fock_gallery(spec);
            bool ok = true;
            for (const auto& e : gallery.entries) {
                std::printf("  %s: pulse F=%.5f prep F=%.5f open F=%.5f\n", e.state.c_str(),
                            e.pulse_fidelity, e.prep_fidelity, e.prep_fidelity_open);
                ok = ok && e.pulse_fidelity >= 0.99;
            }
            return convergence_exit(ok);
        }
        if (cmd_rounds->parsed()) {
            const RoundsSummary rounds = run_rounds_benchmark(spec);
            for (const auto& [basis, results] : rounds.curves) {
                std::printf("  %s: F1=%.5f\n", basis.c_str(),
                            results.front().fitted_single_round_fidelity);
            }
            return 0;
        }
        if (cmd_sweep->parsed()) {
            const SweepSummary sweep = run_distance_sweep(spec);
            for (const auto& e : sweep.entries) {
                std::printf("  %s %4.1f km %s: F1=%.5f (delay %.2f us)\n", e.basis.c_str(),
                            e.length_km, e.decoherence ? "open" : "closed", e.fitted_f1,
                            e.delay_us);
            }
            return 0;
        }
        if (cmd_fock10->parsed()) {
            const Fock10Summary f10 = run_fock10(spec);
            std::printf("fock10: prep F=%.5f sup F=%.5f rings(ideal)=%d mle F=%.5f\n",
                        f10.prep_fidelity, f10.sup_prep_fidelity, f10.ring_sign_changes_ideal,
                        f10.mle_fidelity);
            return convergence_exit(f10.prep_fidelity >= 0.95 && f10.sup_prep_fidelity >= 0.95);
        }
        if (cmd_wigner->parsed()) {
            Matrix rho;
            HilbertConfig config(wigner_dim);
            if (!wigner_rho_path.empty()) {
                std::ifstream in(wigner_rho_path);
                if (!in) throw ValidationError("cannot open " + wigner_rho_path);
                std::stringstream buf;
                buf << in.rdbuf();
                rho = matrix_from_json(buf.str());
                config = HilbertConfig(static_cast<int>(rho.rows()));
            } else {
                rho = named_cavity_state(wigner_state, config);
            }
            const WignerGrid grid{wigner_extent, wigner_points};
            const WignerMap map = wigner_cavity(rho, config, grid, spec.threads);
            write_csv(spec, "wigner.csv", map.to_csv());
            std::printf("wigner: %dx%d map, W(0)=%.5f -> %s/wigner.csv\n", wigner_points,
                        wigner_points, map.at(wigner_points / 2, wigner_points / 2),
                        spec.out_dir.c_str());
            return 0;
        }
        if (cmd_recon->parsed()) {
            std::ifstream in(recon_input);
            if (!in) throw ValidationError("cannot open " + recon_input);
            std::vector<TomographyRecord> records;
            std::string line;
            bool first = true;
            while (std::getline(in, line)) {
                if (line.empty() || line[0] == '#') continue;
                if (first) {
                    first = false;
                    continue;
                }
                std::istringstream cells(line);
                std::string re, im, parity;
                if (!std::getline(cells, re, ',') || !std::getline(cells, im, ',') ||
                    !std::getline(cells, parity, ',')) {
                    throw ValidationError("reconstruct: bad row: " + line);
                }
                TomographyRecord rec;
                rec.alpha = Complex(std::stod(re), std::stod(im));
                rec.parity = std::stod(parity);
                records.push_back(rec);
            }
            HilbertConfig config(recon_dim);
            MleOptions opts;
            opts.dim = recon_dim;
            const MleResult mle = mle_reconstruct(records, config, opts);
            auto j = nlohmann::json::parse(matrix_to_json(mle.rho));
            j["converged"] = mle.converged;
            j["iterations"] = mle.iterations;
            write_text_file(spec.out_dir + "/reconstructed_rho.json", j.dump(2) + "\n");
            std::ostringstream ll;
            ll << "iter,loglik\n";
            for (std::size_t i = 0; i < mle.loglik_history.size(); ++i) {
                ll << i << "," << format_double(mle.loglik_history[i]) << "\n";
            }
            write_csv(spec, "reconstruct_loglik.csv", ll.str());
            std::printf("reconstruct: %d iterations, %s\n", mle.iterations,
                        mle.converged ? "converged" : "not converged");
            return convergence_exit(mle.converged);
        }
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 2;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
