#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "boslink/harness.hpp"
#include "oracles.hpp"

using namespace boslink;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

ExperimentSpec tiny_spec(const std::string& out_dir) {
    ExperimentSpec spec;
    spec.out_dir = out_dir;
    spec.seed = 11;
    spec.threads = 2;
    spec.iq_grid_points = 9;
    spec.iq_mod_max = 8.0;
    spec.wigner_points = 21;
    return spec;
}

} // namespace

TEST_CASE("experiment spec round trips through the config dialect") {
    ExperimentSpec spec;
    spec.system.chi_sq = kTwoPi * 0.5e6;
    spec.link.length_km = 7.5;
    spec.grape.durations["fock1"] = 1.7e-6;
    spec.seed = 99;
    spec.decoherence = false;
    spec.rounds_list = {0, 2, 4};
    const Config cfg = spec.to_config();
    const ExperimentSpec restored = ExperimentSpec::from_config(cfg);
    CHECK(restored.system.chi_sq == doctest::Approx(spec.system.chi_sq));
    CHECK(restored.link.length_km == doctest::Approx(7.5));
    CHECK(restored.grape.durations.at("fock1") == doctest::Approx(1.7e-6));
    CHECK(restored.rounds_list == spec.rounds_list);
    // Note: seed/decoherence ride on the [harness] section.
    CHECK(restored.seed == 99);
    CHECK_FALSE(restored.decoherence);
    CHECK(restored.config_hash() == spec.config_hash());
}

TEST_CASE("metadata header carries version, hash, seed, and assumed keys") {
    const ExperimentSpec spec = tiny_spec("/tmp/boslink_test_meta");
    const std::string header = metadata_header(spec);
    CHECK(header.find("# artifact_version=") != std::string::npos);
    CHECK(header.find("# config_hash=") != std::string::npos);
    CHECK(header.find("# seed=11") != std::string::npos);
    CHECK(header.find("t1_qubit") != std::string::npos);
}

TEST_CASE("IQ scan: origin is dark, pattern is concentric, cut shows Rabi fringes") {
    const ExperimentSpec spec = tiny_spec("/tmp/boslink_test_iq");
    const RabiIqSummary summary = run_rabi_iq_scan(spec);
    CHECK(summary.origin_pe == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(summary.max_angular_deviation < 1e-6);

    // The Q=0 row of the written map reproduces sin^2(area/2) fringes: the
    // resonant Gaussian drive commutes with itself at all times.
    const std::string csv = read_file(spec.out_dir + "/rabi_iq_scan.csv");
    std::istringstream in(csv);
    std::string line;
    const double sigma = 60e-9, dt = 2e-9;
    const int segments = 180;
    double grid_area_unit = 0.0; // pulse area per modulation unit
    for (int k = 0; k < segments; ++k) {
        const double t = (k + 0.5) * dt - segments * dt / 2.0;
        grid_area_unit += std::exp(-t * t / (2.0 * sigma * sigma)) * dt;
    }
    grid_area_unit *= spec.link.conversion_gain;
    int checked = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 'm') continue;
        std::istringstream cells(line);
        std::string si, sq, spe;
        std::getline(cells, si, ',');
        std::getline(cells, sq, ',');
        std::getline(cells, spe, ',');
        if (std::abs(std::stod(sq)) > 1e-12) continue;
        const double expected = std::pow(std::sin(std::stod(si) * grid_area_unit / 2.0), 2);
        CHECK(std::stod(spe) == doctest::Approx(expected).epsilon(1e-6));
        ++checked;
    }
    CHECK(checked == spec.iq_grid_points);
}

TEST_CASE("fixed-seed harness runs are byte-identical") {
    const ExperimentSpec a = tiny_spec("/tmp/boslink_test_det_a");
    const ExperimentSpec b = tiny_spec("/tmp/boslink_test_det_b");
    run_rabi_iq_scan(a);
    run_rabi_iq_scan(b);
    CHECK(read_file(a.out_dir + "/rabi_iq_scan.csv") ==
          read_file(b.out_dir + "/rabi_iq_scan.csv"));

    run_displacement_calibration(a);
    run_displacement_calibration(b);
    CHECK(read_file(a.out_dir + "/displacement_calibration.csv") ==
          read_file(b.out_dir + "/displacement_calibration.csv"));
    CHECK(read_file(a.out_dir + "/displacement_distributions.csv") ==
          read_file(b.out_dir + "/displacement_distributions.csv"));
}

TEST_CASE("displacement calibration is linear; Poisson-exact in the linear reference") {
    ExperimentSpec spec = tiny_spec("/tmp/boslink_test_dispcal");
    const DisplacementCalSummary with_kerr = run_displacement_calibration(spec);
    CHECK(with_kerr.alpha_fit.r_squared > 0.9999);

    // chi = K = 0 reference: driven displacement is exactly coherent, so the
    // measured distributions sit on the Poisson curve to 1e-6.
    spec.out_dir = "/tmp/boslink_test_dispcal_ref";
    spec.system.chi_sq = 0.0;
    spec.system.kerr_g = 0.0;
    const DisplacementCalSummary reference = run_displacement_calibration(spec);
    CHECK(reference.max_poisson_deviation < 1e-6);
    CHECK(reference.alpha_fit.r_squared > 0.999999);
}

TEST_CASE("rabi transfer harness writes the linearity summary") {
    const ExperimentSpec spec = tiny_spec("/tmp/boslink_test_transfer");
    const RabiScanResult result = run_rabi_transfer(spec);
    CHECK(result.r_squared > 0.9999);
    const std::string csv = read_file(spec.out_dir + "/rabi_transfer.csv");
    CHECK(csv.find("mod_amplitude,rabi_frequency_mhz,fit_residual") != std::string::npos);
}

TEST_CASE("pulse cache: second synthesis loads identical bytes") {
    ExperimentSpec spec = tiny_spec("/tmp/boslink_test_cache");
    std::filesystem::remove_all(spec.out_dir);
    // A cheap d=1 prep: a small coherent target needs no chi time, so the
    // optimizer converges in seconds.
    const HilbertConfig cfg = HilbertConfig::for_max_photon(4);
    Vector target(cfg.cavity_dim);
    for (int n = 0; n < cfg.cavity_dim; ++n) {
        target(n) = std::exp(-0.32) * std::pow(0.8, n) / std::sqrt(std::tgamma(n + 1.0));
    }
    spec.grape.durations["tiny"] = 0.2e-6;
    spec.grape.max_iters = 400;
    spec.grape.prep_target = 0.99;
    const SynthesizedPulse first = synthesize_prep(spec, target, "tiny");
    CHECK_FALSE(first.from_cache);
    CHECK(first.converged);
    CHECK(first.fidelity >= 0.99);
    const SynthesizedPulse second = synthesize_prep(spec, target, "tiny");
    CHECK(second.from_cache);
    CHECK(second.fidelity == doctest::Approx(first.fidelity).epsilon(1e-15));
    CHECK((second.pulse.segments.array() == first.pulse.segments.array()).all());
}

TEST_CASE("named cavity states parse and normalize") {
    const HilbertConfig cfg(12);
    const Matrix fock = named_cavity_state("fock:3", cfg);
    CHECK(fock(3, 3).real() == doctest::Approx(1.0));

    const Matrix coh = named_cavity_state("coh:1.0", cfg);
    CHECK(coh(0, 0).real() == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));

    const Matrix sup = named_cavity_state("sup:0,3", cfg);
    CHECK(sup(0, 0).real() == doctest::Approx(0.5));
    CHECK(sup(3, 3).real() == doctest::Approx(0.5));

    CHECK_THROWS_AS(named_cavity_state("fock:40", cfg), ValidationError);
    CHECK_THROWS_AS(named_cavity_state("junk:1", cfg), ValidationError);
}

TEST_CASE("csv writers prepend the metadata header") {
    const ExperimentSpec spec = tiny_spec("/tmp/boslink_test_csvmeta");
    write_csv(spec, "sample.csv", "a,b\n1,2\n");
    const std::string content = read_file(spec.out_dir + "/sample.csv");
    CHECK(content.rfind("# artifact_version=", 0) == 0);
    CHECK(content.find("a,b\n1,2\n") != std::string::npos);
}
