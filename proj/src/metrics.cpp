#include "remfx/metrics.hpp"

#include <cmath>
#include <limits>

namespace remfx {

double si_sdr(const AudioClip& estimate, const AudioClip& reference) {
    if (estimate.length() != reference.length())
        throw LengthMismatch("si_sdr: estimate and reference lengths differ");
    double dot = 0.0, ref_energy = 0.0;
    for (size_t n = 0; n < reference.length(); ++n) {
        dot += static_cast<double>(estimate.samples[n]) * reference.samples[n];
        ref_energy += static_cast<double>(reference.samples[n]) * reference.samples[n];
    }
    if (ref_energy == 0.0) throw ZeroReference("si_sdr: reference is all zero");

    const double alpha = dot / ref_energy;
    double target_energy = 0.0, residual_energy = 0.0;
    for (size_t n = 0; n < reference.length(); ++n) {
        const double t = alpha * reference.samples[n];
        const double r = estimate.samples[n] - t;
        target_energy += t * t;
        residual_energy += r * r;
    }
    if (residual_energy < 1e-12 * target_energy)
        return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(target_energy / residual_energy);
}

double mr_stft_error(const AudioClip& estimate, const AudioClip& reference,
                     const MrStftConfig& cfg) {
    if (estimate.length() != reference.length())
        throw LengthMismatch("mr_stft_error: lengths differ");
    double total = 0.0;
    for (const auto& [fft_size, hop_size] : cfg.resolutions) {
        SpectralConfig sc;
        sc.fft_size = fft_size;
        sc.hop_size = hop_size;
        const ComplexSpectrogram est = stft(estimate, sc);
        const ComplexSpectrogram ref = stft(reference, sc);

        double diff_sq = 0.0, ref_sq = 0.0, log_l1 = 0.0;
        for (size_t i = 0; i < ref.data.size(); ++i) {
            const double me = std::abs(est.data[i]);
            const double mr = std::abs(ref.data[i]);
            diff_sq += (me - mr) * (me - mr);
            ref_sq += mr * mr;
            log_l1 += std::abs(std::log(me + kLogEps) - std::log(mr + kLogEps));
        }
        const double sc_term = std::sqrt(diff_sq) / (std::sqrt(ref_sq) + 1e-30);
        const double mag_term = log_l1 / static_cast<double>(ref.data.size());
        total += sc_term + mag_term;
    }
    return total / static_cast<double>(cfg.resolutions.size());
}

double improvement(double metric_on_output, double metric_on_input, Direction direction) {
    return direction == Direction::HigherBetter ? metric_on_output - metric_on_input
                                                : metric_on_input - metric_on_output;
}

double composite_loss(const AudioClip& estimate, const AudioClip& reference) {
    if (estimate.length() != reference.length())
        throw LengthMismatch("composite_loss: lengths differ");
    double l1 = 0.0;
    for (size_t n = 0; n < reference.length(); ++n)
        l1 += std::abs(static_cast<double>(estimate.samples[n]) - reference.samples[n]);
    l1 /= static_cast<double>(reference.length());
    return 100.0 * l1 + mr_stft_error(estimate, reference);
}

} // namespace remfx
