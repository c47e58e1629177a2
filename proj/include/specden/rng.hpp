#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <limits>
#include <string>

namespace specden {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Output is a
/// pure function of (key, counter), which makes independent streams trivial
/// to carve out for parallel trials.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter ctr, Key key);
};

/// Stream tags keep the counter spaces of unrelated consumers apart.
enum class StreamTag : std::uint32_t {
    Entries = 1,       // standardized entries X_ij of a Monte Carlo trial
    FigureSetup = 2,   // quenched randomness inside a model constructor
    Channel = 3,       // MIMO channel draws
    QuadraticForm = 4, // concentration experiments
    Test = 99
};

/// A sequential view onto one Philox stream identified by
/// (seed, tag, trial, column). Counter layout: {block, column, trial, tag}.
/// Satisfies UniformRandomBitGenerator with 32-bit output.
class RandomStream {
public:
    using result_type = std::uint32_t;

    RandomStream(std::uint64_t seed, StreamTag tag, std::uint32_t trial, std::uint32_t column);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    /// Uniform on (0, 1), 53-bit resolution, never returns 0 or 1.
    double uniform01();
    double standard_normal();

private:
    Philox4x32::Key key_{};
    Philox4x32::Counter ctr_{};
    Philox4x32::Counter buffer_{};
    int used_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Law of the standardized entries: zero mean, unit second moment.
struct ElementDistribution {
    enum class Kind {
        ComplexGaussian,
        UniformSymmetric,  // complex: (u1 + i u2)/sqrt(2), u_k ~ U[-sqrt3, sqrt3]
        UniformReal,       // real U[-sqrt3, sqrt3]
        RademacherComplex, // (+-1 +- i)/sqrt(2)
        StudentT           // complex, each part standardized t(dof)/sqrt(2)
    };

    Kind kind = Kind::ComplexGaussian;
    double dof = 0.0;

    static ElementDistribution complex_gaussian() { return {Kind::ComplexGaussian, 0.0}; }
    static ElementDistribution uniform_symmetric() { return {Kind::UniformSymmetric, 0.0}; }
    static ElementDistribution uniform_real() { return {Kind::UniformReal, 0.0}; }
    static ElementDistribution rademacher_complex() { return {Kind::RademacherComplex, 0.0}; }
    static ElementDistribution student_t(double dof);

    /// Draws one entry.
    std::complex<double> draw(RandomStream& rng) const;

    /// True when the law has a finite 4+eps moment.
    bool satisfies_moment_condition() const;

    std::string name() const;
    static ElementDistribution parse(const std::string& name);
};

} // namespace specden
