#include <fftw3.h>

#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <sstream>

#include "hlock/dynamics.hpp"

namespace hlock
{
namespace
{
// FFTW planning is not thread-safe; execution on a private plan is.
std::mutex g_plan_mutex;

struct PlanDeleter
{
    void operator()(fftw_plan_s *plan) const
    {
        std::lock_guard lock(g_plan_mutex);
        fftw_destroy_plan(plan);
    }
};

struct FftwBuffer
{
    void operator()(void *p) const { fftw_free(p); }
};

std::vector<double> hann(std::size_t n)
{
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(n)));
    }
    return w;
}
}  // namespace

Psd welch_psd(const std::vector<double> &samples, double dt, std::size_t segment_length,
              double overlap)
{
    if (!(overlap >= 0.0 && overlap <= 0.9)) {
        throw std::invalid_argument("overlap must lie in [0, 0.9]");
    }
    if (segment_length < 2 || segment_length > samples.size()) {
        throw std::invalid_argument("segment length must be between 2 and the series length");
    }
    if (!(dt > 0.0)) {
        throw std::invalid_argument("sample spacing must be positive");
    }
    const auto shift = static_cast<std::size_t>(
        std::llround(static_cast<double>(segment_length) * (1.0 - overlap)));
    const std::size_t step = std::max<std::size_t>(shift, 1);
    const std::size_t segments = (samples.size() - segment_length) / step + 1;
    if (segments < 16) {
        std::ostringstream os;
        os << "only " << segments << " segments fit; at least 16 are required";
        throw TooFewSegments(os.str());
    }

    const std::size_t bins = segment_length / 2 + 1;
    std::unique_ptr<double, FftwBuffer> in(fftw_alloc_real(segment_length));
    std::unique_ptr<fftw_complex, FftwBuffer> out(fftw_alloc_complex(bins));
    std::unique_ptr<fftw_plan_s, PlanDeleter> plan;
    {
        std::lock_guard lock(g_plan_mutex);
        plan.reset(fftw_plan_dft_r2c_1d(static_cast<int>(segment_length), in.get(), out.get(),
                                        FFTW_ESTIMATE));
    }

    const std::vector<double> window = hann(segment_length);
    double window_power = 0.0;
    for (double w : window) {
        window_power += w * w;
    }

    Psd psd;
    psd.segments = segments;
    psd.value.assign(bins, 0.0);
    for (std::size_t s = 0; s < segments; ++s) {
        const double *seg = samples.data() + s * step;
        for (std::size_t i = 0; i < segment_length; ++i) {
            in.get()[i] = seg[i] * window[i];
        }
        fftw_execute(plan.get());
        for (std::size_t k = 0; k < bins; ++k) {
            const double re = out.get()[k][0];
            const double im = out.get()[k][1];
            psd.value[k] += re * re + im * im;
        }
    }
    const double scale = 1.0 / (window_power * static_cast<double>(segments));
    psd.omega.resize(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        psd.value[k] *= scale;
        psd.omega[k] = kTwoPi * static_cast<double>(k) / (static_cast<double>(segment_length) * dt);
    }
    return psd;
}

}  // namespace hlock
