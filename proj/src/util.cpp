#include "cdf/log.hpp"
#include "cdf/parallel.hpp"
#include "cdf/rng.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>

#include <cmath>
#include <cstdlib>
#include <numbers>

#include <omp.h>

namespace cdf {

int thread_count() { return omp_get_max_threads(); }

int Rng::uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(static_cast<std::int64_t>(hi) - lo) + 1;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return lo + static_cast<int>(x % span);
}

double Rng::normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Vec3 Rng::unit_vector() {
    for (;;) {
        Vec3 g(normal(), normal(), normal());
        const double n = g.norm();
        if (n > 1e-12) return g / n;
    }
}

std::uint64_t Rng::derive(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

spdlog::logger& log() {
    static std::shared_ptr<spdlog::logger> logger = [] {
        auto l = spdlog::stderr_color_mt("cdf");
        spdlog::level::level_enum level = spdlog::level::warn;
        if (const char* env = std::getenv("CDF_LOG")) level = spdlog::level::from_str(env);
        l->set_level(level);
        return l;
    }();
    return *logger;
}

}  // namespace cdf
