#include "boslink/optlink.hpp"

#include <cmath>
#include <sstream>

namespace boslink {

void LinkParams::validate() const {
    if (fiber_atten_db_per_km < 0 || coax_atten_db_per_km < 0) {
        throw ValidationError("LinkParams: attenuation must be non-negative");
    }
    if (length_km < 0) throw ValidationError("LinkParams: length must be non-negative");
    if (group_index < 1.0) throw ValidationError("LinkParams: group index must be >= 1");
    if (conversion_gain <= 0) throw ValidationError("LinkParams: conversion gain must be positive");
    if (linear_range_max <= 0) throw ValidationError("LinkParams: linear range must be positive");
    if (crosstalk_db > 0) throw ValidationError("LinkParams: crosstalk must be <= 0 dB");
}

ChannelResponse link_response(const LinkParams& params, LinkMedium medium, double length_km) {
    params.validate();
    if (length_km < 0) throw ValidationError("link_response: negative length");
    const double atten =
        medium == LinkMedium::Fiber ? params.fiber_atten_db_per_km : params.coax_atten_db_per_km;
    ChannelResponse r;
    r.length_km = length_km;
    r.medium = medium;
    r.transmittance = std::pow(10.0, -atten * length_km / 10.0);
    r.eta_heat = 1.0 - r.transmittance;
    if (medium == LinkMedium::Fiber) {
        r.delay_s = length_km * 1000.0 * params.group_index / kSpeedOfLight;
        r.delay_known = true;
    } else {
        r.delay_s = 0.0;
        r.delay_known = false;
    }
    r.effective_gain = params.conversion_gain * std::sqrt(r.transmittance);
    return r;
}

std::vector<ChannelResponse> link_budget(const LinkParams& params, LinkMedium medium,
                                         const std::vector<double>& lengths_km) {
    std::vector<ChannelResponse> out;
    out.reserve(lengths_km.size());
    for (const double l : lengths_km) out.push_back(link_response(params, medium, l));
    return out;
}

std::string link_budget_csv(const std::vector<ChannelResponse>& responses) {
    std::ostringstream out;
    out << "length_km,medium,transmittance,eta_heat,delay_us\n";
    for (const auto& r : responses) {
        out << format_double(r.length_km) << ","
            << (r.medium == LinkMedium::Fiber ? "fiber" : "coax") << ","
            << format_double(r.transmittance) << "," << format_double(r.eta_heat) << ",";
        if (r.delay_known) {
            out << format_double(r.delay_s * 1e6);
        } else {
            out << "nan";
        }
        out << "\n";
    }
    return out.str();
}

ControlPulse apply_link(const ControlPulse& pulse, const LinkParams& params, bool recalibrate) {
    params.validate();
    if (pulse.max_channel_magnitude() > params.linear_range_max * (1.0 + 1e-12)) {
        throw NonlinearityError(
            "apply_link: pulse amplitude exceeds the modeled linear range of the chain");
    }
    const ChannelResponse r = link_response(params, LinkMedium::Fiber, params.length_km);
    ControlPulse out = pulse;
    out.t0 = pulse.t0 + r.delay_s;
    if (!recalibrate) {
        out.segments *= std::sqrt(r.transmittance);
    }
    return out;
}

std::vector<ControlPulse> array_crosstalk(const std::vector<ControlPulse>& pulses,
                                          double crosstalk_db) {
    if (crosstalk_db > 0) throw ValidationError("array_crosstalk: crosstalk must be <= 0 dB");
    if (pulses.size() <= 1) return pulses;
    for (std::size_t i = 1; i < pulses.size(); ++i) {
        if (pulses[i].n_segments() != pulses[0].n_segments() ||
            std::abs(pulses[i].dt - pulses[0].dt) > 1e-18) {
            throw ValidationError("array_crosstalk: time grids differ between channels");
        }
    }
    const double x = std::isinf(crosstalk_db) ? 0.0 : std::pow(10.0, crosstalk_db / 20.0);
    if (x == 0.0) return pulses;

    std::vector<ControlPulse> out = pulses;
    for (std::size_t k = 0; k < pulses.size(); ++k) {
        for (std::size_t j = 0; j < pulses.size(); ++j) {
            if (j == k) continue;
            out[k].segments += x * pulses[j].segments;
        }
    }
    return out;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw ValidationError("linear_fit: need at least two points");
    }
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-300) throw NumericalError("linear_fit: degenerate abscissa");
    LinearFit fit;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    const double mean_y = sy / n;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double pred = fit.intercept + fit.slope * x[i];
        ss_res += (y[i] - pred) * (y[i] - pred);
        ss_tot += (y[i] - mean_y) * (y[i] - mean_y);
    }
    fit.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

namespace {

// Omega from uniform samples of cos(Omega t) via the three-term recurrence
// s_{k+1} + s_{k-1} = 2 cos(Omega h) s_k; exact for a clean sinusoid.
std::pair<double, double> fit_cosine_frequency(const std::vector<double>& s, double h) {
    if (s.size() < 3) throw NumericalError("rabi fit: too few samples");
    double num = 0, den = 0;
    for (std::size_t k = 1; k + 1 < s.size(); ++k) {
        num += (s[k + 1] + s[k - 1]) * s[k];
        den += 2.0 * s[k] * s[k];
    }
    if (den < 1e-12) throw NumericalError("rabi fit: degenerate samples");
    double c = num / den;
    c = std::clamp(c, -1.0, 1.0);
    const double omega = std::acos(c) / h;
    double residual = 0;
    for (std::size_t k = 1; k + 1 < s.size(); ++k) {
        const double r = s[k + 1] + s[k - 1] - 2.0 * c * s[k];
        residual += r * r;
    }
    return {omega, std::sqrt(residual / static_cast<double>(s.size() - 2))};
}

} // namespace

RabiScanResult rabi_transfer_scan(const LinkParams& params,
                                  const std::vector<double>& modulation_amplitudes,
                                  const SystemParams& system, const HilbertConfig& config,
                                  double duration, double dt) {
    params.validate();
    system.validate();
    const Operator h0 = drift_hamiltonian(system, FrameSpec::resonant(system), config);
    const DriveOperators drives = drive_hamiltonians(config);
    const QuantumState ground = basis_state(config, 0, 0);
    const int n_segments = std::max(3, static_cast<int>(std::lround(duration / dt)));

    RabiScanResult result;
    for (const double mod : modulation_amplitudes) {
        const double device_amp = mod * params.conversion_gain;
        if (std::abs(device_amp) > params.linear_range_max) {
            throw NonlinearityError("rabi_transfer_scan: amplitude outside the linear range");
        }
        RabiScanPoint point;
        point.modulation_amplitude = mod;
        if (mod == 0.0) {
            result.points.push_back(point);
            continue;
        }
        ControlPulse pulse = ControlPulse::zero(dt, n_segments);
        pulse.segments.col(0).setConstant(device_amp);
        pulse = apply_link(pulse, params, /*recalibrate=*/false);

        PropagateOptions opts;
        opts.snapshot_stride = 1;
        const PropagationResult prop = propagate_unitary(h0, drives, pulse, ground, opts);

        std::vector<double> s;
        s.reserve(prop.snapshots.size() + 1);
        s.push_back(1.0); // t = 0: P(e) = 0
        for (const auto& v : prop.snapshots) {
            double pe = 0.0;
            for (int n = 0; n < config.cavity_dim; ++n) {
                pe += std::norm(v(config.index(1, n)));
            }
            s.push_back(1.0 - 2.0 * pe);
        }
        const auto [omega, residual] = fit_cosine_frequency(s, dt);
        point.rabi_frequency = omega;
        point.fit_residual = residual;
        result.points.push_back(point);
    }

    std::vector<double> xs, ys;
    for (const auto& pnt : result.points) {
        xs.push_back(pnt.modulation_amplitude);
        ys.push_back(pnt.rabi_frequency);
    }
    if (xs.size() >= 2) {
        const LinearFit fit = linear_fit(xs, ys);
        result.slope = fit.slope;
        result.r_squared = fit.r_squared;
    }
    return result;
}

} // namespace boslink
