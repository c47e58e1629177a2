#include "specden/fixedpoint.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "specden/error.hpp"
#include "specden/parallel.hpp"

namespace specden {

SpectralPoint::SpectralPoint(cplx z) : z_(z) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw InvalidArgument("spectral point must be finite");
    const bool upper = z.imag() > 0.0;
    const bool negative_axis = z.imag() == 0.0 && z.real() < 0.0;
    if (!upper && !negative_axis) {
        std::ostringstream os;
        os << "spectral point " << z.real() << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag())
           << "i is outside the admissible domain (need Im z > 0, or z < 0 real)";
        throw InvalidArgument(os.str());
    }
}

void SolverOptions::check() const {
    if (!(tol > 0.0)) throw InvalidArgument("solver tolerance must be positive");
    if (!(damping > 0.0 && damping <= 1.0)) throw InvalidArgument("damping must lie in (0, 1]");
    if (max_iter < 1) throw InvalidArgument("max_iter must be at least 1");
    if (anderson_depth < 0) throw InvalidArgument("anderson_depth must be non-negative");
}

namespace {

constexpr Index kGridChunk = 32;

struct MapState {
    VectorXcd f_diag;       // diagonal of F (jointly diagonal path, rotated frame)
    MatrixXcd f_inv;        // F^{-1} (general path)
    VectorXcd f_tilde;      // diagonal of F~
    VectorXcd theta_diag;   // diagonal of Theta (rotated frame)
    MatrixXcd theta;        // Theta (general path)
    MatrixXcd m_small;      // (I + K G)^{-1} K, r x r (jointly diagonal path)
    MatrixXcd t_small;      // L^H Theta L, r x r
    VectorXcd next_delta;
    VectorXcd next_delta_tilde;
};

} // namespace

struct FixedPointSystem::Impl {
    const ModelSpec& model;
    Index p;
    Index n;
    bool diagonal;
    MatrixXd spectra;                 // p x n, jointly diagonal path
    std::optional<MatrixXcd> basis;
    MatrixXcd omega_stack;            // p^2 x n, general path (column j = vec(Omega_j))
    MatrixXcd omega_stack_t;          // n x p^2, vec(Omega_j^T) as rows
    MatrixXcd left;                   // L = U_r S_r (rotated frame), p x r
    MatrixXcd right;                  // R = V_r, n x r
    Index rank;

    explicit Impl(const ModelSpec& m) : model(m), p(m.p()), n(m.n()) {
        const CorrelationSet& omega = m.correlations();
        diagonal = omega.is_jointly_diagonal();
        MatrixXcd mean = m.mean();
        if (diagonal) {
            spectra = omega.spectra();
            basis = omega.basis();
            if (basis) mean = basis->adjoint() * mean;
        } else {
            omega_stack.resize(p * p, n);
            omega_stack_t.resize(n, p * p);
            for (Index j = 0; j < n; ++j) {
                const MatrixXcd& om = omega.matrices()[static_cast<std::size_t>(j)];
                omega_stack.col(j) = om.reshaped();
                omega_stack_t.row(j) = om.transpose().reshaped().transpose();
            }
        }
        factor_mean(mean);
    }

    void factor_mean(const MatrixXcd& mean) {
        if (mean.cwiseAbs().maxCoeff() == 0.0) {
            rank = 0;
            left.resize(p, 0);
            right.resize(n, 0);
            return;
        }
        Eigen::BDCSVD<MatrixXcd> svd(mean, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const VectorXd& s = svd.singularValues();
        const double cutoff = s(0) * 1e-14;
        rank = 0;
        while (rank < s.size() && s(rank) > cutoff) ++rank;
        left = svd.matrixU().leftCols(rank) * s.head(rank).cast<cplx>().asDiagonal();
        right = svd.matrixV().leftCols(rank);
    }

    // One application of the fixed-point map at z; fills `st`.
    void evaluate(cplx z, const VectorXcd& delta, const VectorXcd& delta_tilde, MapState& st) const {
        const double inv_n = 1.0 / static_cast<double>(n);
        st.f_tilde = (-1.0 / (z * (VectorXcd::Ones(n) + delta).array())).matrix();

        MatrixXcd k_small;
        if (rank > 0) {
            // K = -z R^H F~ R = R^H diag(1/(1+delta)) R
            const VectorXcd weights = (-z * st.f_tilde.array()).matrix();
            k_small = right.adjoint() * weights.asDiagonal() * right;
        }

        if (diagonal) {
            const VectorXcd f_inv = (-z * (1.0 + (spectra * delta_tilde).array() * inv_n)).matrix();
            st.f_diag = f_inv.cwiseInverse();
            st.theta_diag = st.f_diag;
            if (rank > 0) {
                const MatrixXcd fl = st.f_diag.asDiagonal() * left;        // F L
                const MatrixXcd g_small = left.adjoint() * fl;             // G = L^H F L
                const MatrixXcd ikg = MatrixXcd::Identity(rank, rank) + k_small * g_small;
                st.m_small = ikg.partialPivLu().solve(k_small);
                // diag(F L M L^H F)
                const MatrixXcd flm = fl * st.m_small;
                const MatrixXcd fl_bar = st.f_diag.asDiagonal() * left.conjugate();
                st.theta_diag -= flm.cwiseProduct(fl_bar).rowwise().sum();
                st.t_small = g_small - g_small * st.m_small * g_small;
            }
            st.next_delta = (spectra.transpose() * st.theta_diag) * inv_n;
        } else {
            const VectorXcd weighted = omega_stack * delta_tilde * inv_n;
            st.f_inv = -z * weighted.reshaped(p, p);
            st.f_inv.diagonal().array() -= z;
            MatrixXcd system = st.f_inv;
            if (rank > 0) system.noalias() += left * k_small * left.adjoint();
            st.theta = system.partialPivLu().inverse();
            if (rank > 0) st.t_small = left.adjoint() * st.theta * left;
            // Tr(Omega_i Theta) = sum_kl Omega_i(k,l) Theta(l,k)
            st.next_delta = omega_stack_t * st.theta.reshaped() * inv_n;
        }

        st.next_delta_tilde = st.f_tilde;
        if (rank > 0) {
            // [A^H Theta A]_jj = R_j T R_j^H
            const MatrixXcd rt = right * st.t_small;
            const VectorXcd quad = rt.cwiseProduct(right.conjugate()).rowwise().sum();
            st.next_delta_tilde.array() += z * st.f_tilde.array().square() * quad.array();
        }
    }

    void fill_matrices(cplx z, MapState& st, Solution& sol) const {
        if (diagonal) {
            MatrixXcd theta = st.f_diag.asDiagonal();
            if (rank > 0) {
                const MatrixXcd fl = st.f_diag.asDiagonal() * left;
                theta.noalias() -= fl * st.m_small * left.adjoint() * st.f_diag.asDiagonal();
            }
            MatrixXcd f_mat = st.f_diag.asDiagonal();
            if (basis) {
                theta = *basis * theta * basis->adjoint();
                f_mat = *basis * f_mat * basis->adjoint();
            }
            sol.theta = std::move(theta);
            sol.f_mat = std::move(f_mat);
        } else {
            sol.theta = st.theta;
            sol.f_mat = st.f_inv.partialPivLu().inverse();
        }
        MatrixXcd theta_tilde = st.f_tilde.asDiagonal();
        if (rank > 0) {
            const MatrixXcd fr = st.f_tilde.asDiagonal() * right;
            theta_tilde.noalias() += z * fr * st.t_small * right.adjoint() * st.f_tilde.asDiagonal();
        }
        sol.theta_tilde = std::move(theta_tilde);
    }

    cplx trace_mean(const MapState& st) const {
        if (diagonal) return st.theta_diag.mean();
        return st.theta.trace() / static_cast<double>(p);
    }

    static bool admissible(const VectorXcd& x, bool real_axis) {
        if (!x.allFinite()) return false;
        if (real_axis) return (x.real().array() > 0.0).all();
        return (x.imag().array() > 0.0).all();
    }

    Solution iterate(cplx z, VectorXcd delta, VectorXcd delta_tilde, const SolverOptions& opts) const {
        const bool real_axis = z.imag() == 0.0;
        const double lambda = opts.damping;
        const Index depth = opts.anderson_depth;
        MapState st;
        double residual = std::numeric_limits<double>::infinity();
        int it = 0;

        // Anderson mixing over the stacked iterate x = [delta; delta~]
        VectorXcd x(2 * n), g(2 * n), x_prev, g_prev;
        MatrixXcd dx(2 * n, depth), dg(2 * n, depth);
        Index stored = 0, head = 0;

        while (true) {
            evaluate(z, delta, delta_tilde, st);
            ++it;
            if (real_axis) {
                st.next_delta = st.next_delta.real().cast<cplx>();
                st.next_delta_tilde = st.next_delta_tilde.real().cast<cplx>();
            }
            if (!st.next_delta.allFinite() || !st.next_delta_tilde.allFinite()) {
                std::ostringstream os;
                os << "fixed-point map produced non-finite values at z = " << z << " (iteration " << it << ")";
                throw NumericalDomainError(os.str());
            }
            const double change = std::max((st.next_delta - delta).cwiseAbs().maxCoeff(),
                                           (st.next_delta_tilde - delta_tilde).cwiseAbs().maxCoeff());
            const double scale = std::max({1.0, delta.cwiseAbs().maxCoeff(), delta_tilde.cwiseAbs().maxCoeff()});
            residual = change / scale;
            if (residual <= opts.tol) break;
            if (it >= opts.max_iter) {
                std::ostringstream os;
                os << "fixed-point iteration did not converge at z = " << z << ": residual " << residual
                   << " after " << it << " iterations";
                throw NonConvergenceError(os.str(), std::move(delta), std::move(delta_tilde), residual, it);
            }

            x << delta, delta_tilde;
            g << st.next_delta - delta, st.next_delta_tilde - delta_tilde;
            VectorXcd damped = x + lambda * g;
            VectorXcd next = damped;
            if (depth > 0) {
                if (x_prev.size() > 0) {
                    dx.col(head) = x - x_prev;
                    dg.col(head) = g - g_prev;
                    head = (head + 1) % depth;
                    stored = std::min(stored + 1, depth);
                }
                x_prev = x;
                g_prev = g;
                if (stored > 0) {
                    const auto dgs = dg.leftCols(stored);
                    const VectorXcd gamma = dgs.colPivHouseholderQr().solve(g);
                    next -= (dx.leftCols(stored) + lambda * dgs) * gamma;
                    if (!admissible(next, real_axis)) {
                        // extrapolation left the Stieltjes class: restart from a plain damped step
                        next = damped;
                        stored = 0;
                        head = 0;
                    }
                }
            }
            delta = next.head(n);
            delta_tilde = next.tail(n);
        }

        Solution sol;
        sol.z = z;
        sol.delta = std::move(delta);
        sol.delta_tilde = std::move(delta_tilde);
        sol.f_tilde_diag = st.f_tilde;
        sol.m_n = trace_mean(st);
        sol.iterations = it;
        sol.residual = residual;
        if (opts.full_matrices) fill_matrices(z, st, sol);
        return sol;
    }
};

FixedPointSystem::FixedPointSystem(const ModelSpec& model)
    : model_(std::make_shared<const ModelSpec>(model)), impl_(std::make_unique<Impl>(*model_)) {}

FixedPointSystem::~FixedPointSystem() = default;
FixedPointSystem::FixedPointSystem(FixedPointSystem&&) noexcept = default;
FixedPointSystem& FixedPointSystem::operator=(FixedPointSystem&&) noexcept = default;

Index FixedPointSystem::mean_rank() const { return impl_->rank; }

std::pair<VectorXcd, VectorXcd> FixedPointSystem::apply_map(cplx z, const VectorXcd& delta,
                                                            const VectorXcd& delta_tilde) const {
    if (delta.size() != impl_->n || delta_tilde.size() != impl_->n)
        throw InvalidArgument("apply_map expects vectors of length n");
    MapState st;
    impl_->evaluate(z, delta, delta_tilde, st);
    return {st.next_delta, st.next_delta_tilde};
}

Solution FixedPointSystem::solve(const SpectralPoint& point, const SolverOptions& opts) const {
    opts.check();
    const cplx z = point.z();
    const Index n = impl_->n;

    if (opts.warm) {
        if (opts.warm->delta.size() != n || opts.warm->delta_tilde.size() != n)
            throw InvalidArgument("warm start has wrong length");
        VectorXcd d = opts.warm->delta;
        VectorXcd dt = opts.warm->delta_tilde;
        if (point.on_negative_axis()) {
            d = d.real().cast<cplx>();
            dt = dt.real().cast<cplx>();
        }
        return impl_->iterate(z, std::move(d), std::move(dt), opts);
    }

    // cold start: -1/z, the Stieltjes transform of a unit mass at 0
    auto cold = [&](cplx at) { return VectorXcd::Constant(n, -1.0 / at); };

    if (point.on_negative_axis() || z.imag() >= kContinuationStart)
        return impl_->iterate(z, cold(z), cold(z), opts);

    SolverOptions stage = opts;
    stage.full_matrices = false;
    double y = kContinuationStart;
    cplx at(z.real(), y);
    Solution current = impl_->iterate(at, cold(at), cold(at), stage);
    int total = current.iterations;
    for (y *= 0.5; y > z.imag(); y *= 0.5) {
        at = cplx(z.real(), y);
        current = impl_->iterate(at, std::move(current.delta), std::move(current.delta_tilde), stage);
        total += current.iterations;
    }
    Solution last = impl_->iterate(z, std::move(current.delta), std::move(current.delta_tilde), opts);
    last.iterations += total;
    return last;
}

Solution FixedPointSystem::solve_real_axis(double x, const SolverOptions& opts) const {
    if (x < 0.0) return solve(SpectralPoint(x, 0.0), opts);
    if (x == 0.0) throw InvalidArgument("the real-axis limit is not evaluated at x = 0");
    return solve(SpectralPoint(x, kContinuationFloor), opts);
}

std::vector<Solution> FixedPointSystem::solve_grid(std::span<const SpectralPoint> points,
                                                   const SolverOptions& opts) const {
    if (points.empty()) throw InvalidArgument("solve_grid needs at least one point");
    opts.check();
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const cplx za = points[a].z(), zb = points[b].z();
        if (za.real() != zb.real()) return za.real() < zb.real();
        return za.imag() > zb.imag();
    });

    std::vector<Solution> out(points.size());
    std::vector<GridError::Failure> failures;
    std::mutex failure_mutex;
    const std::size_t chunk = static_cast<std::size_t>(kGridChunk);
    const std::size_t chunks = (points.size() + chunk - 1) / chunk;

    parallel_for(chunks, [&](std::size_t c) {
        std::optional<WarmStart> previous = opts.warm;
        const std::size_t end = std::min(points.size(), (c + 1) * chunk);
        for (std::size_t k = c * chunk; k < end; ++k) {
            const std::size_t idx = order[k];
            SolverOptions local = opts;
            local.warm = previous;
            try {
                try {
                    out[idx] = solve(points[idx], local);
                } catch (const NonConvergenceError&) {
                    if (!local.warm) throw;
                    local.warm.reset();
                    out[idx] = solve(points[idx], local);
                }
                previous = out[idx].warm_start();
            } catch (const Error& e) {
                std::lock_guard lock(failure_mutex);
                failures.push_back({idx, e.kind(), e.what()});
                previous.reset();
            }
        }
    });

    if (!failures.empty()) {
        std::sort(failures.begin(), failures.end(),
                  [](const GridError::Failure& a, const GridError::Failure& b) { return a.index < b.index; });
        std::ostringstream os;
        os << failures.size() << " of " << points.size() << " grid points failed; first at index "
           << failures.front().index << ": " << failures.front().message;
        throw GridError(failures.front().kind, os.str(), std::move(failures));
    }
    return out;
}

Solution solve(const ModelSpec& model, const SpectralPoint& point, const SolverOptions& opts) {
    return FixedPointSystem(model).solve(point, opts);
}

std::vector<Solution> solve_grid(const ModelSpec& model, std::span<const SpectralPoint> points,
                                 const SolverOptions& opts) {
    return FixedPointSystem(model).solve_grid(points, opts);
}

cplx trace_functional(const Solution& sol, const MatrixXcd& c) {
    if (!sol.has_matrices()) throw InvalidArgument("solution was computed without matrices");
    if (c.rows() != sol.theta.rows() || c.cols() != sol.theta.cols())
        throw InvalidArgument("trace functional: C must be p x p");
    // Tr(C Theta) = sum_kl C(k,l) Theta(l,k)
    return c.cwiseProduct(sol.theta.transpose()).sum() / static_cast<double>(sol.theta.rows());
}

cplx bilinear_functional(const Solution& sol, const VectorXcd& u, const VectorXcd& v) {
    if (!sol.has_matrices()) throw InvalidArgument("solution was computed without matrices");
    if (u.size() != sol.theta.rows() || v.size() != sol.theta.rows())
        throw InvalidArgument("bilinear functional: u and v must have length p");
    return u.dot(sol.theta * v);
}

} // namespace specden
