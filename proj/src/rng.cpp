#include "specden/rng.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "specden/error.hpp"

namespace specden {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(prod >> 32);
    lo = static_cast<std::uint32_t>(prod);
}

} // namespace

Philox4x32::Counter Philox4x32::block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

RandomStream::RandomStream(std::uint64_t seed, StreamTag tag, std::uint32_t trial, std::uint32_t column)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      ctr_{0u, column, trial, static_cast<std::uint32_t>(tag)} {}

RandomStream::result_type RandomStream::operator()() {
    if (used_ == 4) {
        buffer_ = Philox4x32::block(ctr_, key_);
        ++ctr_[0];
        used_ = 0;
    }
    return buffer_[used_++];
}

double RandomStream::uniform01() {
    const std::uint64_t hi = (*this)() >> 5; // 27 bits
    const std::uint64_t lo = (*this)() >> 6; // 26 bits
    const double u = (static_cast<double>((hi << 26) | lo) + 0.5) * 0x1.0p-53;
    return u;
}

double RandomStream::standard_normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
}

ElementDistribution ElementDistribution::student_t(double dof) {
    if (!(dof > 2.0))
        throw InvalidArgument("student-t entries need dof > 2 for a finite variance");
    return {Kind::StudentT, dof};
}

namespace {

double standardized_t(RandomStream& rng, double dof) {
    // t = N / sqrt(chi2_dof / dof), chi2_dof = 2 * Gamma(dof/2, 1)
    std::gamma_distribution<double> gamma(dof / 2.0, 1.0);
    const double normal = rng.standard_normal();
    const double chi2 = 2.0 * gamma(rng);
    const double t = normal / std::sqrt(chi2 / dof);
    return t * std::sqrt((dof - 2.0) / dof);
}

} // namespace

std::complex<double> ElementDistribution::draw(RandomStream& rng) const {
    static const double kSqrt3 = std::sqrt(3.0);
    static const double kInvSqrt2 = 1.0 / std::numbers::sqrt2;
    switch (kind) {
    case Kind::ComplexGaussian: {
        const double re = rng.standard_normal();
        const double im = rng.standard_normal();
        return {re * kInvSqrt2, im * kInvSqrt2};
    }
    case Kind::UniformSymmetric: {
        const double re = kSqrt3 * (2.0 * rng.uniform01() - 1.0);
        const double im = kSqrt3 * (2.0 * rng.uniform01() - 1.0);
        return {re * kInvSqrt2, im * kInvSqrt2};
    }
    case Kind::UniformReal:
        return {kSqrt3 * (2.0 * rng.uniform01() - 1.0), 0.0};
    case Kind::RademacherComplex: {
        const std::uint32_t bits = rng();
        const double re = (bits & 1u) ? 1.0 : -1.0;
        const double im = (bits & 2u) ? 1.0 : -1.0;
        return {re * kInvSqrt2, im * kInvSqrt2};
    }
    case Kind::StudentT: {
        const double re = standardized_t(rng, dof);
        const double im = standardized_t(rng, dof);
        return {re * kInvSqrt2, im * kInvSqrt2};
    }
    }
    throw InvalidArgument("unknown element distribution");
}

bool ElementDistribution::satisfies_moment_condition() const {
    return kind != Kind::StudentT || dof > 4.0;
}

std::string ElementDistribution::name() const {
    switch (kind) {
    case Kind::ComplexGaussian: return "complex-gaussian";
    case Kind::UniformSymmetric: return "uniform-symmetric";
    case Kind::UniformReal: return "uniform-real";
    case Kind::RademacherComplex: return "rademacher-complex";
    case Kind::StudentT: {
        std::string s = "student-t(";
        const double rounded = std::round(dof);
        s += (rounded == dof) ? std::to_string(static_cast<long long>(rounded)) : std::to_string(dof);
        return s + ")";
    }
    }
    return "unknown";
}

ElementDistribution ElementDistribution::parse(const std::string& name) {
    if (name == "complex-gaussian") return complex_gaussian();
    if (name == "uniform-symmetric") return uniform_symmetric();
    if (name == "uniform-real") return uniform_real();
    if (name == "rademacher-complex") return rademacher_complex();
    const std::string prefix = "student-t(";
    if (name.rfind(prefix, 0) == 0 && name.back() == ')') {
        const std::string inner = name.substr(prefix.size(), name.size() - prefix.size() - 1);
        try {
            std::size_t used = 0;
            const double dof = std::stod(inner, &used);
            if (used == inner.size()) return student_t(dof);
        } catch (const std::logic_error&) {
        }
    }
    throw InvalidArgument("unknown element distribution '" + name + "'");
}

} // namespace specden
