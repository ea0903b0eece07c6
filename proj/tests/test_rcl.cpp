#include "doctest.h"

#include "stgp/errors.hpp"
#include "stgp/gp.hpp"
#include "stgp/partition.hpp"
#include "stgp/rcl.hpp"
#include "stgp/rng.hpp"
#include "stgp/transform.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <set>

using namespace stgp;

namespace {

CovarianceModel toy_gneit() {
    return GneitModel{1.0, 10.0, 0.6, 0.8, 0.1, 20.0, 1.0, 2, 0.0};
}

Dataset grid_dataset(int nx, int ny, int nt, const CovarianceModel& m,
                     std::uint64_t seed) {
    Dataset d;
    for (int ix = 0; ix < nx; ++ix)
        for (int iy = 0; iy < ny; ++iy)
            for (int it = 0; it < nt; ++it)
                d.points.push_back({nx > 1 ? ix / double(nx - 1) : 0.0,
                                    ny > 1 ? iy / double(ny - 1) : 0.0,
                                    nt > 1 ? it / double(nt - 1) : 0.0});
    d.values = simulate_gp(m, d.points, seed);
    return d;
}

void check_partition_shape(const std::vector<std::vector<std::vector<int>>>& reps,
                           int n, int m) {
    for (const auto& blocks : reps) {
        REQUIRE(static_cast<int>(blocks.size()) == m);
        std::set<int> all;
        std::size_t lo = n, hi = 0;
        for (const auto& b : blocks) {
            lo = std::min(lo, b.size());
            hi = std::max(hi, b.size());
            for (int i : b) {
                CHECK(all.insert(i).second); // disjoint
                CHECK(i >= 0);
                CHECK(i < n);
            }
        }
        CHECK(all.size() == static_cast<std::size_t>(n)); // exhaustive
        CHECK(hi - lo <= 1);
    }
}

} // namespace

TEST_CASE("make_partitions shapes and determinism") {
    auto p1 = make_partitions(10, 4, 1, 1, 1, 1, 5);
    CHECK(p1.spatial_blocks[0][0].size() == 10);
    CHECK(p1.temporal_blocks[0][0].size() == 4);

    auto p2 = make_partitions(500, 19, 20, 15, 19, 1, 42);
    check_partition_shape(p2.spatial_blocks, 500, 20);
    check_partition_shape(p2.temporal_blocks, 19, 19);
    for (const auto& rep : p2.spatial_blocks)
        for (const auto& b : rep) CHECK(b.size() == 25);

    auto p3 = make_partitions(322, 355, 46, 4, 355, 1, 7);
    for (const auto& rep : p3.spatial_blocks)
        for (const auto& b : rep) CHECK(b.size() == 7);

    auto p2b = make_partitions(500, 19, 20, 15, 19, 1, 42);
    CHECK(p2.spatial_blocks == p2b.spatial_blocks);
    CHECK(p2.temporal_blocks == p2b.temporal_blocks);
    auto p2c = make_partitions(500, 19, 20, 15, 19, 1, 43);
    CHECK(p2.spatial_blocks != p2c.spatial_blocks);

    CHECK_THROWS_AS(make_partitions(10, 4, 11, 1, 1, 1, 0), DomainError);
    CHECK_THROWS_AS(make_partitions(10, 4, 1, 0, 1, 1, 0), DomainError);
    CHECK_THROWS_AS(make_partitions(10, 4, 1, 1, 5, 1, 0), DomainError);
}

TEST_CASE("grid index construction") {
    auto m = toy_gneit();
    auto d = grid_dataset(3, 2, 4, m, 1);
    auto g = GridIndex::build(d.points);
    CHECK(g.n_locations() == 6);
    CHECK(g.n_times() == 4);
    for (int l = 0; l < 6; ++l)
        for (int t = 0; t < 4; ++t) {
            int i = g.cell(l, t);
            CHECK(d.points[i].t == g.times[t]);
            CHECK(d.points[i].x == g.locations[l].first);
        }
    // incomplete grid
    d.points.pop_back();
    CHECK_THROWS_AS(GridIndex::build(d.points), DataError);
}

TEST_CASE("rcl_loglik equals full loglik on the degenerate plan") {
    auto m = toy_gneit();
    Rng rng(9);
    for (int rep = 0; rep < 5; ++rep) {
        auto d = grid_dataset(3 + rep % 2, 3, 3 + rep % 3, m, 100 + rep);
        auto plan = make_partitions(
            static_cast<int>(GridIndex::build(d.points).locations.size()),
            static_cast<int>(unique_times(d.points).size()), 1, 1, 1, 1, rep);
        double lrc = rcl_loglik(m, d, plan);
        double l = full_loglik(m, d);
        CHECK(std::fabs(lrc - l) <= 1e-8 * std::fabs(l));
    }
}

TEST_CASE("rcl_loglik block-sum oracle on a 20x5 grid") {
    auto m = toy_gneit();
    auto d = grid_dataset(5, 4, 5, m, 17); // 20 locations x 5 times
    auto grid = GridIndex::build(d.points);
    auto plan = make_partitions(20, 5, 2, 1, 5, 1, 99);

    double want = 0.0;
    for (const auto& b : plan.spatial_blocks[0]) {
        std::vector<SpaceTimePoint> pts;
        std::vector<double> vals;
        for (int li : b)
            for (int ti = 0; ti < 5; ++ti) {
                pts.push_back({grid.locations[li].first, grid.locations[li].second,
                               grid.times[ti]});
                vals.push_back(d.values[grid.cell(li, ti)]);
            }
        want += 0.5 * full_loglik(m, pts,
                                  Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size()));
    }
    for (const auto& b : plan.temporal_blocks[0]) {
        std::vector<SpaceTimePoint> pts;
        std::vector<double> vals;
        for (int li = 0; li < 20; ++li)
            for (int ti : b) {
                pts.push_back({grid.locations[li].first, grid.locations[li].second,
                               grid.times[ti]});
                vals.push_back(d.values[grid.cell(li, ti)]);
            }
        want += 0.5 * full_loglik(m, pts,
                                  Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size()));
    }
    CHECK(rcl_loglik(m, d, plan) == doctest::Approx(want).epsilon(1e-12));
    // identical value with parallel block evaluation
    CHECK(rcl_loglik(m, d, plan, 2) == rcl_loglik(m, d, plan, 1));
}

TEST_CASE("duplicated spatial replicate doubles the spatial term") {
    auto m = toy_gneit();
    auto d = grid_dataset(4, 3, 3, m, 21);
    auto p1 = make_partitions(12, 3, 3, 1, 1, 1, 5);
    PartitionPlan p2 = p1;
    p2.spatial_blocks.push_back(p2.spatial_blocks[0]);
    p2.r_s = 2;

    double l1 = rcl_loglik(m, d, p1);
    double l2 = rcl_loglik(m, d, p2);
    // spatial term from the single replicate
    auto grid = GridIndex::build(d.points);
    double spatial = 0.0;
    for (const auto& b : p1.spatial_blocks[0]) {
        std::vector<SpaceTimePoint> pts;
        std::vector<double> vals;
        for (int li : b)
            for (int ti = 0; ti < 3; ++ti) {
                pts.push_back({grid.locations[li].first, grid.locations[li].second,
                               grid.times[ti]});
                vals.push_back(d.values[grid.cell(li, ti)]);
            }
        spatial += full_loglik(m, pts,
                               Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size()));
    }
    CHECK(l2 - l1 == doctest::Approx(0.5 * spatial).epsilon(1e-10));
}

TEST_CASE("concatenating plans adds objectives") {
    auto m = toy_gneit();
    auto d = grid_dataset(4, 3, 4, m, 33);
    auto pa = make_partitions(12, 4, 3, 1, 2, 1, 1);
    auto pb = make_partitions(12, 4, 4, 1, 4, 1, 2);
    PartitionPlan pc = pa;
    pc.spatial_blocks.insert(pc.spatial_blocks.end(), pb.spatial_blocks.begin(),
                             pb.spatial_blocks.end());
    pc.temporal_blocks.insert(pc.temporal_blocks.end(),
                              pb.temporal_blocks.begin(),
                              pb.temporal_blocks.end());
    double sum = rcl_loglik(m, d, pa) + rcl_loglik(m, d, pb);
    CHECK(rcl_loglik(m, d, pc) == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("parameter transforms") {
    auto m = toy_gneit();
    auto layout = layout_for(m);
    CHECK(layout.size() == 7);
    auto theta = pack_natural(m);
    CHECK(theta[0] == 1.0);

    // anchors
    Eigen::VectorXd u = transform_vec(theta, layout);
    CHECK(u[0] == 0.0); // log sigma = 0
    CHECK(u[3] == doctest::Approx(std::log(0.8 / 0.2)).epsilon(1e-12)); // logit beta

    // round trip on random in-bound vectors
    Rng rng(12);
    for (int k = 0; k < 30; ++k) {
        Eigen::VectorXd nat(7);
        nat << 0.3 + rng.uniform(), 0.5 + 10 * rng.uniform(),
            0.05 + 0.9 * rng.uniform(), 0.05 + 0.9 * rng.uniform(),
            rng.uniform(), 1.0 + 20.0 * rng.uniform(), 0.2 + 2.0 * rng.uniform();
        Eigen::VectorXd back = untransform_vec(transform_vec(nat, layout), layout);
        CHECK((back - nat).cwiseAbs().maxCoeff() < 1e-12);
        // offset shifts coordinates but not the natural values
        Eigen::VectorXd back2 =
            untransform_vec(transform_vec(nat, layout, 1.5), layout, 1.5);
        CHECK((back2 - nat).cwiseAbs().maxCoeff() < 1e-12);
    }

    Eigen::VectorXd bad = theta;
    bad[0] = -1.0;
    CHECK_THROWS_AS(transform_vec(bad, layout), DomainError);
    bad = theta;
    bad[2] = 1.5;
    CHECK_THROWS_AS(transform_vec(bad, layout), DomainError);

    // unpack recomputes alpha_bar for Tvar
    TvarModel tv;
    tv.sigma = 1.0;
    tv.a = 10.0;
    tv.gamma = 0.6;
    tv.beta = 0.8;
    tv.delta = 0.1;
    tv.alpha_fn = TimeFn({std::log(20.0), 0.5});
    tv.nu_fn = TimeFn({std::log(1.0)});
    tv.alpha_bar = 1.0; // stale
    std::vector<double> times = {0.0, 0.5, 1.0};
    auto packed = pack_natural(CovarianceModel(tv));
    auto rebuilt = std::get<TvarModel>(
        unpack_natural(CovarianceModel(tv), packed, &times));
    CHECK(rebuilt.alpha_bar ==
          doctest::Approx(alpha_bar_mean(tv.alpha_fn, times)).epsilon(1e-14));
}

TEST_CASE("rcl_score: analytic vs finite differences") {
    auto m = toy_gneit();
    auto d = grid_dataset(3, 2, 2, m, 3); // 12 points
    auto plan = make_partitions(6, 2, 2, 1, 2, 1, 4);
    auto sa = rcl_score(m, d, plan, ScoreMethod::Analytic);
    auto sf = rcl_score(m, d, plan, ScoreMethod::FiniteDifference);
    REQUIRE(sa.size() == 7);
    for (int r = 0; r < 7; ++r) {
        double denom = std::max(std::fabs(sf[r]), 1e-6);
        CHECK(std::fabs(sa[r] - sf[r]) / denom < 1e-4);
    }
}

TEST_CASE("rcl_score sign at an inflated sigma") {
    auto truth = toy_gneit();
    auto d = grid_dataset(5, 4, 3, truth, 8);
    auto plan = make_partitions(20, 3, 2, 1, 3, 1, 6);
    auto inflated = std::get<GneitModel>(truth);
    inflated.sigma *= 2.0;
    auto s = rcl_score(CovarianceModel(inflated), d, plan, ScoreMethod::Analytic);
    CHECK(s[0] < 0.0); // sigma component pushes back down
}

TEST_CASE("rcl_score is unbiased at the truth (small Monte Carlo)") {
    auto m = toy_gneit();
    Dataset proto = grid_dataset(4, 3, 3, m, 1);
    auto plan = make_partitions(12, 3, 3, 1, 3, 1, 11);
    const int sims = 120;
    Eigen::MatrixXd scores(sims, 7);
    for (int s = 0; s < sims; ++s) {
        Dataset d = proto;
        d.values = simulate_gp(m, d.points, Rng::derive(2222, s));
        scores.row(s) = rcl_score(m, d, plan, ScoreMethod::Analytic).transpose();
    }
    for (int r = 0; r < 7; ++r) {
        double mean = scores.col(r).mean();
        double sd = std::sqrt((scores.col(r).array() - mean).square().sum() /
                              (sims - 1));
        CHECK(std::fabs(mean) <= 3.5 * sd / std::sqrt(double(sims)));
    }
}

TEST_CASE("expected_hessian: Fisher oracle at the degenerate plan") {
    auto m = toy_gneit();
    auto d = grid_dataset(3, 2, 3, m, 5); // 18 points
    auto plan = make_partitions(6, 3, 1, 1, 1, 1, 2);
    auto h = expected_hessian(m, d.points, plan);
    REQUIRE(h.rows() == 7);

    // independent Fisher computation with its own difference step
    auto theta = pack_natural(m);
    auto times = unique_times(d.points);
    auto dcov = [&](int r) {
        double step = 1e-6 * std::max(std::fabs(theta[r]), 1.0);
        Eigen::VectorXd tp = theta, tm = theta;
        tp[r] += step;
        tm[r] -= step;
        Eigen::MatrixXd cp =
            build_cov_matrix(unpack_natural(m, tp, &times), d.points);
        Eigen::MatrixXd cm =
            build_cov_matrix(unpack_natural(m, tm, &times), d.points);
        return Eigen::MatrixXd((cp - cm) / (2.0 * step));
    };
    Eigen::MatrixXd cov = build_cov_matrix(m, d.points);
    Eigen::MatrixXd inv = cov.fullPivLu().inverse();
    for (int r = 0; r < 7; ++r)
        for (int s = 0; s < 7; ++s) {
            double fisher = 0.5 * (inv * dcov(r) * inv * dcov(s)).trace();
            CHECK(h(r, s) == doctest::Approx(fisher).epsilon(5e-4));
        }

    // symmetry is exact by construction
    CHECK((h - h.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    CHECK(es.eigenvalues().minCoeff() >= -1e-8 * es.eigenvalues().maxCoeff());
}

TEST_CASE("expected_hessian: one-point grid gives the scalar rate") {
    GneitModel g{1.7, 10.0, 0.6, 0.8, 0.1, 20.0, 1.0, 2, 0.0};
    CovarianceModel m = g;
    std::vector<SpaceTimePoint> pts = {{0.0, 0.0, 0.0}};
    auto plan = make_partitions(1, 1, 1, 1, 1, 1, 0);
    auto h = expected_hessian(m, pts, plan);
    // d/dsigma of sigma^2 is 2 sigma; H_sigma,sigma = 1/2 (2/sigma)^2 = 2/sigma^2
    CHECK(h(0, 0) == doctest::Approx(2.0 / (1.7 * 1.7)).epsilon(1e-4));
    for (int r = 1; r < 7; ++r) CHECK(std::fabs(h(r, r)) < 1e-8);
}

TEST_CASE("expected_hessian refuses beyond desk scale") {
    auto m = toy_gneit();
    Dataset d = grid_dataset(16, 16, 5, m, 2); // 1280 points, blocks sum > 2000
    auto plan = make_partitions(256, 5, 2, 1, 1, 1, 0);
    CHECK_THROWS_AS(expected_hessian(m, d.points, plan), DomainError);
}

namespace {

// all parameters identifiable: short temporal lags keep the Bernstein factor
// responsive, moderate alpha keeps spatial correlation alive
CovarianceModel informative_gneit() {
    return GneitModel{1.0, 10.0, 0.6, 0.8, 0.1, 5.0, 1.0, 2, 0.0};
}

std::vector<SpaceTimePoint> tight_grid(int nx, int ny, int nt) {
    std::vector<SpaceTimePoint> pts;
    for (int ix = 0; ix < nx; ++ix)
        for (int iy = 0; iy < ny; ++iy)
            for (int it = 0; it < nt; ++it)
                pts.push_back({ix / double(std::max(1, nx - 1)),
                               iy / double(std::max(1, ny - 1)), it * 0.05});
    return pts;
}

} // namespace

TEST_CASE("godambe equals inverse Fisher at the degenerate plan") {
    auto m = informative_gneit();
    auto pts = tight_grid(3, 2, 5); // 30 points
    auto plan = make_partitions(6, 5, 1, 1, 1, 1, 2);
    auto h = expected_hessian(m, pts, plan);
    auto ginv = godambe_variance(m, pts, plan);
    Eigen::MatrixXd hinv =
        h.ldlt().solve(Eigen::MatrixXd::Identity(h.rows(), h.cols()));
    CHECK((ginv - hinv).norm() <= 1e-6 * hinv.norm());
}

TEST_CASE("godambe trace shrinks as data grows") {
    auto m = informative_gneit();
    auto small = tight_grid(3, 2, 4);
    auto big = tight_grid(4, 3, 5);
    auto ps = make_partitions(6, 4, 2, 1, 2, 1, 2);
    auto pb = make_partitions(12, 5, 2, 1, 2, 1, 2);
    double ts = godambe_variance(m, small, ps).trace();
    double tb = godambe_variance(m, big, pb).trace();
    CHECK(tb < ts);
}
