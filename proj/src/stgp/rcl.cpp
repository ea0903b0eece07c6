#include "stgp/rcl.hpp"
#include "stgp/errors.hpp"
#include "stgp/gp.hpp"
#include "stgp/transform.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace stgp {

namespace {

template <class F>
void parallel_for(int n, int n_threads, F&& body) {
    int k = std::min(n_threads, n);
    if (k <= 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex err_mutex;
    std::vector<std::thread> workers;
    workers.reserve(k);
    for (int w = 0; w < k; ++w)
        workers.emplace_back([&] {
            int i;
            while ((i = next.fetch_add(1)) < n) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    for (auto& t : workers) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::string block_name(const Block& b) {
    std::ostringstream os;
    os << (b.spatial ? "spatial" : "temporal") << " block (replicate "
       << b.replicate << ", index " << b.index << ", " << b.points.size()
       << " points)";
    return os.str();
}

// finite-difference step in natural space
double fd_step(double theta_r) {
    return std::max(1e-5 * std::fabs(theta_r), 1e-7);
}

Eigen::MatrixXd cov_derivative(const CovarianceModel& proto,
                               const Eigen::VectorXd& theta, int r,
                               const std::vector<SpaceTimePoint>& pts,
                               const std::vector<double>& times) {
    double h = fd_step(theta[r]);
    Eigen::VectorXd tp = theta, tm = theta;
    tp[r] += h;
    tm[r] -= h;
    auto cp = build_cov_matrix(unpack_natural(proto, tp, &times), pts);
    auto cm = build_cov_matrix(unpack_natural(proto, tm, &times), pts);
    return (cp - cm) / (2.0 * h);
}

void check_desk_scale(const std::vector<Block>& blocks, std::size_t cap,
                      const char* who) {
    std::size_t total = 0;
    for (const auto& b : blocks) total += b.points.size();
    if (total > cap) {
        std::ostringstream os;
        os << who << ": total block dimension " << total << " exceeds the cap "
           << cap << " (" << blocks.size() << " blocks)";
        throw DomainError(os.str());
    }
}

} // namespace

GridIndex GridIndex::build(const std::vector<SpaceTimePoint>& points) {
    if (points.empty()) throw DataError("GridIndex: empty point list");
    std::map<std::pair<double, double>, int> lmap;
    std::map<double, int> tmap;
    for (const auto& p : points) {
        lmap.emplace(std::make_pair(p.x, p.y), 0);
        tmap.emplace(p.t, 0);
    }
    GridIndex g;
    int li = 0, ti = 0;
    for (auto& kv : lmap) {
        g.locations.push_back(kv.first);
        kv.second = li++;
    }
    for (auto& kv : tmap) {
        g.times.push_back(kv.first);
        kv.second = ti++;
    }
    std::size_t ns = g.locations.size(), nt = g.times.size();
    if (ns * nt != points.size()) {
        std::ostringstream os;
        os << "RCL needs data on a complete space x time grid: found " << ns
           << " locations x " << nt << " times but " << points.size()
           << " observations";
        throw DataError(os.str());
    }
    g.cell = Eigen::MatrixXi::Constant(static_cast<int>(ns),
                                       static_cast<int>(nt), -1);
    for (std::size_t i = 0; i < points.size(); ++i) {
        int l = lmap.find({points[i].x, points[i].y})->second;
        int t = tmap.find(points[i].t)->second;
        if (g.cell(l, t) != -1)
            throw DataError("RCL grid: duplicate observation at a grid cell");
        g.cell(l, t) = static_cast<int>(i);
    }
    return g;
}

std::vector<Block> make_blocks(const GridIndex& grid,
                               const PartitionPlan& plan) {
    std::vector<Block> blocks;
    for (std::size_t rep = 0; rep < plan.spatial_blocks.size(); ++rep) {
        const auto& replicate = plan.spatial_blocks[rep];
        for (std::size_t bi = 0; bi < replicate.size(); ++bi) {
            Block b;
            b.spatial = true;
            b.replicate = static_cast<int>(rep);
            b.index = static_cast<int>(bi);
            for (int li : replicate[bi]) {
                if (li < 0 || li >= grid.n_locations())
                    throw DomainError("make_blocks: location index out of range");
                for (int ti = 0; ti < grid.n_times(); ++ti) {
                    b.points.push_back({grid.locations[li].first,
                                        grid.locations[li].second,
                                        grid.times[ti]});
                    b.data_index.push_back(grid.cell(li, ti));
                }
            }
            blocks.push_back(std::move(b));
        }
    }
    for (std::size_t rep = 0; rep < plan.temporal_blocks.size(); ++rep) {
        const auto& replicate = plan.temporal_blocks[rep];
        for (std::size_t bi = 0; bi < replicate.size(); ++bi) {
            Block b;
            b.spatial = false;
            b.replicate = static_cast<int>(rep);
            b.index = static_cast<int>(bi);
            for (int li = 0; li < grid.n_locations(); ++li) {
                for (int ti : replicate[bi]) {
                    if (ti < 0 || ti >= grid.n_times())
                        throw DomainError("make_blocks: time index out of range");
                    b.points.push_back({grid.locations[li].first,
                                        grid.locations[li].second,
                                        grid.times[ti]});
                    b.data_index.push_back(grid.cell(li, ti));
                }
            }
            blocks.push_back(std::move(b));
        }
    }
    return blocks;
}

Eigen::VectorXd block_values(const Block& b, const Eigen::VectorXd& values) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(b.data_index.size()));
    for (std::size_t i = 0; i < b.data_index.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = values[b.data_index[i]];
    return v;
}

double rcl_loglik_blocks(const CovarianceModel& m,
                         const std::vector<Block>& blocks,
                         const Eigen::VectorXd& values, int n_threads) {
    std::vector<double> ll(blocks.size());
    parallel_for(static_cast<int>(blocks.size()), n_threads, [&](int i) {
        const Block& b = blocks[i];
        try {
            ll[i] = full_loglik(m, b.points, block_values(b, values));
        } catch (const NumericalError& e) {
            throw NumericalError(std::string(e.what()) + " in " + block_name(b));
        }
    });
    double spatial = 0.0, temporal = 0.0;
    for (std::size_t i = 0; i < blocks.size(); ++i)
        (blocks[i].spatial ? spatial : temporal) += ll[i];
    return 0.5 * spatial + 0.5 * temporal;
}

double rcl_loglik(const CovarianceModel& m, const Dataset& data,
                  const PartitionPlan& plan, int n_threads) {
    auto grid = GridIndex::build(data.points);
    auto blocks = make_blocks(grid, plan);
    return rcl_loglik_blocks(m, blocks, data.values, n_threads);
}

RclWorkspace::RclWorkspace(const GridIndex& grid, const PartitionPlan& plan,
                           const Eigen::VectorXd& values, bool stationary_keys) {
    blocks_ = make_blocks(grid, plan);

    // pair keys: distinct (lo, hi) time-index pairs, or distinct |dt| gaps
    const int nt = grid.n_times();
    std::vector<int> pair_of; // dense (lo, hi) triangular id -> pair index
    pair_of.assign(static_cast<std::size_t>(nt) * (nt + 1) / 2, -1);
    std::map<double, int> gap_of;
    auto pair_key = [&](double ta, double tb, int ia, int ib) {
        if (stationary_keys) {
            double gap = std::fabs(ta - tb);
            auto it = gap_of.find(gap);
            if (it != gap_of.end()) return it->second;
            int id = static_cast<int>(pair_times_.size());
            gap_of.emplace(gap, id);
            pair_times_.push_back({0.0, gap});
            return id;
        }
        int lo = std::min(ia, ib), hi = std::max(ia, ib);
        std::size_t tri = static_cast<std::size_t>(hi) * (hi + 1) / 2 + lo;
        if (pair_of[tri] >= 0) return pair_of[tri];
        int id = static_cast<int>(pair_times_.size());
        pair_of[tri] = id;
        pair_times_.push_back({grid.times[lo], grid.times[hi]});
        return id;
    };

    std::map<double, int> time_index;
    for (int t = 0; t < nt; ++t) time_index.emplace(grid.times[t], t);

    struct ComboKey {
        int pair;
        std::uint64_t r2bits;
        bool operator<(const ComboKey& o) const {
            return pair != o.pair ? pair < o.pair : r2bits < o.r2bits;
        }
    };
    std::map<ComboKey, int> combos;

    blocks_data_.reserve(blocks_.size());
    for (const auto& b : blocks_) {
        BlockData bd;
        bd.spatial = b.spatial;
        bd.replicate = b.replicate;
        bd.index = b.index;
        bd.x = block_values(b, values);
        const int n = static_cast<int>(b.points.size());
        bd.eidx.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
        for (int j = 0; j < n; ++j) {
            int tj = time_index.find(b.points[j].t)->second;
            for (int i = j + 1; i < n; ++i) {
                int ti = time_index.find(b.points[i].t)->second;
                double dx = b.points[i].x - b.points[j].x;
                double dy = b.points[i].y - b.points[j].y;
                double r2 = dx * dx + dy * dy;
                std::uint64_t r2b;
                std::memcpy(&r2b, &r2, sizeof r2b);
                int pk = pair_key(b.points[i].t, b.points[j].t, ti, tj);
                ComboKey key{pk, r2b};
                auto ins = combos.emplace(key, static_cast<int>(combo_pair_.size()));
                if (ins.second) {
                    combo_pair_.push_back(pk);
                    combo_r_.push_back(std::sqrt(r2));
                }
                bd.eidx.push_back(ins.first->second);
            }
        }
        blocks_data_.push_back(std::move(bd));
    }
}

double RclWorkspace::loglik(const CovarianceModel& m, int n_threads) const {
    constexpr double kLog2PiLocal = 1.8378770664093454836;
    const int np = static_cast<int>(pair_times_.size());
    std::vector<PairEval> pe(np);
    for (int k = 0; k < np; ++k)
        pe[k] = make_pair_eval(m, pair_times_[k].first, pair_times_[k].second);

    const int nu = static_cast<int>(combo_r_.size());
    std::vector<double> vals(nu);
    const int chunk = 2048;
    const int nchunks = (nu + chunk - 1) / chunk;
    parallel_for(nchunks, n_threads, [&](int c) {
        int lo = c * chunk, hi = std::min(nu, lo + chunk);
        for (int u = lo; u < hi; ++u) vals[u] = pe[combo_pair_[u]](combo_r_[u]);
    });

    double s = model_sigma(m);
    double diag = s * s + model_nugget(m);
    std::vector<double> ll(blocks_data_.size());
    parallel_for(static_cast<int>(blocks_data_.size()), n_threads, [&](int bi) {
        const BlockData& bd = blocks_data_[bi];
        const int n = static_cast<int>(bd.x.size());
        Eigen::MatrixXd cov(n, n);
        std::size_t e = 0;
        for (int j = 0; j < n; ++j) {
            cov(j, j) = diag;
            for (int i = j + 1; i < n; ++i) {
                double v = vals[bd.eidx[e++]];
                cov(i, j) = cov(j, i) = v;
            }
        }
        try {
            CholFactor f = jittered_cholesky(cov, s * s);
            double quad = f.half_solve(bd.x).squaredNorm();
            ll[bi] = -0.5 * (f.log_det() + quad + n * kLog2PiLocal);
        } catch (const NumericalError& err) {
            std::ostringstream os;
            os << err.what() << " in " << (bd.spatial ? "spatial" : "temporal")
               << " block (replicate " << bd.replicate << ", index " << bd.index
               << ")";
            throw NumericalError(os.str());
        }
    });
    double spatial = 0.0, temporal = 0.0;
    for (std::size_t i = 0; i < blocks_data_.size(); ++i)
        (blocks_data_[i].spatial ? spatial : temporal) += ll[i];
    return 0.5 * spatial + 0.5 * temporal;
}

Eigen::VectorXd rcl_score(const CovarianceModel& m, const Dataset& data,
                          const PartitionPlan& plan, ScoreMethod method,
                          int n_threads) {
    auto grid = GridIndex::build(data.points);
    auto blocks = make_blocks(grid, plan);
    auto theta = pack_natural(m);
    const int p = static_cast<int>(theta.size());
    Eigen::VectorXd score = Eigen::VectorXd::Zero(p);

    if (method == ScoreMethod::FiniteDifference) {
        for (int r = 0; r < p; ++r) {
            double h = fd_step(theta[r]);
            Eigen::VectorXd tp = theta, tm = theta;
            tp[r] += h;
            tm[r] -= h;
            double lp = rcl_loglik_blocks(unpack_natural(m, tp, &grid.times),
                                          blocks, data.values, n_threads);
            double lm = rcl_loglik_blocks(unpack_natural(m, tm, &grid.times),
                                          blocks, data.values, n_threads);
            score[r] = (lp - lm) / (2.0 * h);
        }
        return score;
    }

    // analytic trace/quadratic-form expansion, one term per block
    std::vector<Eigen::VectorXd> contrib(blocks.size());
    parallel_for(static_cast<int>(blocks.size()), n_threads, [&](int i) {
        const Block& b = blocks[i];
        Eigen::VectorXd x = block_values(b, data.values);
        auto cov = build_cov_matrix(m, b.points);
        double s = model_sigma(m);
        CholFactor f = jittered_cholesky(cov, s * s);
        Eigen::MatrixXd identity =
            Eigen::MatrixXd::Identity(cov.rows(), cov.cols());
        Eigen::MatrixXd inv = f.l.transpose().triangularView<Eigen::Upper>().solve(
            f.l.triangularView<Eigen::Lower>().solve(identity));
        Eigen::VectorXd w = inv * x;
        Eigen::VectorXd sc(p);
        for (int r = 0; r < p; ++r) {
            Eigen::MatrixXd d = cov_derivative(m, theta, r, b.points, grid.times);
            double tr = inv.cwiseProduct(d).sum(); // trace(Sigma^{-1} dSigma)
            sc[r] = -0.5 * tr + 0.5 * w.dot(d * w);
        }
        contrib[i] = sc;
    });
    for (const auto& c : contrib) score += c;
    return 0.5 * score;
}

Eigen::MatrixXd expected_hessian(const CovarianceModel& m,
                                 const std::vector<SpaceTimePoint>& points,
                                 const PartitionPlan& plan) {
    auto grid = GridIndex::build(points);
    auto blocks = make_blocks(grid, plan);
    check_desk_scale(blocks, 2000, "expected_hessian");
    auto theta = pack_natural(m);
    const int p = static_cast<int>(theta.size());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(p, p);
    for (const auto& b : blocks) {
        auto cov = build_cov_matrix(m, b.points);
        double s = model_sigma(m);
        CholFactor f = jittered_cholesky(cov, s * s);
        Eigen::MatrixXd identity =
            Eigen::MatrixXd::Identity(cov.rows(), cov.cols());
        Eigen::MatrixXd inv = f.l.transpose().triangularView<Eigen::Upper>().solve(
            f.l.triangularView<Eigen::Lower>().solve(identity));
        std::vector<Eigen::MatrixXd> a(p); // Sigma^{-1} dSigma_r
        for (int r = 0; r < p; ++r)
            a[r] = inv * cov_derivative(m, theta, r, b.points, grid.times);
        for (int r = 0; r < p; ++r)
            for (int s2 = r; s2 < p; ++s2)
                h(r, s2) += 0.25 * a[s2].cwiseProduct(a[r].transpose()).sum();
    }
    for (int r = 0; r < p; ++r)
        for (int s2 = 0; s2 < r; ++s2) h(r, s2) = h(s2, r);
    return h;
}

Eigen::MatrixXd score_covariance(const CovarianceModel& m,
                                 const std::vector<SpaceTimePoint>& points,
                                 const PartitionPlan& plan) {
    auto grid = GridIndex::build(points);
    auto blocks = make_blocks(grid, plan);
    const int nb = static_cast<int>(blocks.size());
    for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j)
            if (blocks[i].points.size() + blocks[j].points.size() > 4000) {
                std::ostringstream os;
                os << "score_covariance: paired block dimension "
                   << blocks[i].points.size() + blocks[j].points.size()
                   << " exceeds the 4000 cap";
                throw DomainError(os.str());
            }

    auto theta = pack_natural(m);
    const int p = static_cast<int>(theta.size());

    // per block: L^r = Sigma^{-1} dSigma_r Sigma^{-1}
    std::vector<std::vector<Eigen::MatrixXd>> lmat(nb);
    for (int i = 0; i < nb; ++i) {
        const Block& b = blocks[i];
        auto cov = build_cov_matrix(m, b.points);
        double s = model_sigma(m);
        CholFactor f = jittered_cholesky(cov, s * s);
        Eigen::MatrixXd identity =
            Eigen::MatrixXd::Identity(cov.rows(), cov.cols());
        Eigen::MatrixXd inv = f.l.transpose().triangularView<Eigen::Upper>().solve(
            f.l.triangularView<Eigen::Lower>().solve(identity));
        lmat[i].resize(p);
        for (int r = 0; r < p; ++r)
            lmat[i][r] =
                inv * cov_derivative(m, theta, r, b.points, grid.times) * inv;
    }

    // J_rs = (1/8) sum over ordered block pairs of
    //        trace(L^r_{b1} Sigma_{b1 b2} L^s_{b2} Sigma_{b2 b1})
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(p, p);
    for (int b1 = 0; b1 < nb; ++b1)
        for (int b2 = 0; b2 < nb; ++b2) {
            Eigen::MatrixXd cross =
                (b1 == b2) ? build_cov_matrix(m, blocks[b1].points)
                           : build_cross_cov(m, blocks[b1].points,
                                             blocks[b2].points);
            for (int r = 0; r < p; ++r) {
                Eigen::MatrixXd t1 = lmat[b1][r] * cross;
                for (int s2 = 0; s2 < p; ++s2) {
                    Eigen::MatrixXd t2 = lmat[b2][s2] * cross.transpose();
                    j(r, s2) += 0.125 * t1.cwiseProduct(t2.transpose()).sum();
                }
            }
        }
    // enforce exact symmetry of the accumulated sums
    Eigen::MatrixXd sym = 0.5 * (j + j.transpose());
    return sym;
}

Eigen::MatrixXd godambe_variance(const CovarianceModel& m,
                                 const std::vector<SpaceTimePoint>& points,
                                 const PartitionPlan& plan) {
    Eigen::MatrixXd h = expected_hessian(m, points, plan);
    Eigen::MatrixXd j = score_covariance(m, points, plan);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eh(h);
    double hmin = eh.eigenvalues().minCoeff(), hmax = eh.eigenvalues().maxCoeff();
    if (!(hmin > 1e-12 * std::max(1.0, hmax))) {
        std::ostringstream os;
        os << "godambe_variance: H is numerically singular (eigenvalues in ["
           << hmin << ", " << hmax << "])";
        throw NumericalError(os.str());
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ej(j);
    double jmin = ej.eigenvalues().minCoeff(), jmax = ej.eigenvalues().maxCoeff();
    if (!(jmin > 1e-12 * std::max(1.0, jmax))) {
        std::ostringstream os;
        os << "godambe_variance: J is numerically singular (eigenvalues in ["
           << jmin << ", " << jmax << "])";
        throw NumericalError(os.str());
    }
    Eigen::MatrixXd hinv = h.ldlt().solve(
        Eigen::MatrixXd::Identity(h.rows(), h.cols()));
    // G^{-1} = H^{-1} J H^{-1}
    Eigen::MatrixXd ginv = hinv * j * hinv;
    return 0.5 * (ginv + ginv.transpose());
}

} // namespace stgp
