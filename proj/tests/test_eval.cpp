// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mvs/eval/metrics.hpp"
#include "mvs/tensor/rng.hpp"

using mvs::GridIndex;
using mvs::Rng;
using Cloud = std::vector<Eigen::Vector3d>;

namespace {

Cloud random_cloud(Rng& rng, int n, double extent = 10.0)
{
    Cloud out;
    out.reserve(n);
    for (int i = 0; i < n; ++i)
        out.emplace_back(rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                         rng.uniform(-extent, extent));
    return out;
}

} // namespace

TEST_CASE("nearest neighbor: single point, member query, brute == grid bit-exact")
{
    Cloud single = {Eigen::Vector3d(1, 2, 3)};
    const auto r = mvs::nearest_brute(Eigen::Vector3d(0, 0, 0), single);
    CHECK(r.index == 0);
    CHECK(r.distance == doctest::Approx(std::sqrt(14.0)));
    GridIndex idx(single);
    CHECK(idx.nearest(Eigen::Vector3d(0, 0, 0)).distance == r.distance);

    Rng rng(1);
    for (int trial = 0; trial < 10; ++trial)
    {
        Cloud cloud = random_cloud(rng, 1000);
        GridIndex grid(cloud);
        for (int q = 0; q < 50; ++q)
        {
            const Eigen::Vector3d query(rng.uniform(-12, 12), rng.uniform(-12, 12),
                                        rng.uniform(-12, 12));
            const auto brute = mvs::nearest_brute(query, cloud);
            const auto fast = grid.nearest(query);
            CHECK(brute.index == fast.index);
            CHECK(brute.distance == fast.distance); // bit-exact
        }
        // a member point of the cloud is its own neighbor at distance zero
        const auto self = grid.nearest(cloud[123]);
        CHECK(self.distance == 0.0);
        CHECK(self.index == 123);
    }
}

TEST_CASE("distance metrics: identical, translated, capped")
{
    // integer grid spacing 1, so a small translation keeps each point's
    // nearest neighbor equal to its own clone
    Cloud grid;
    for (int x = 0; x < 5; ++x)
        for (int y = 0; y < 5; ++y)
            for (int z = 0; z < 3; ++z)
                grid.emplace_back(x, y, z);

    CHECK(mvs::accuracy_distance(grid, grid, 20.0) == 0.0);
    CHECK(mvs::completeness_distance(grid, grid, 20.0) == 0.0);

    const Eigen::Vector3d delta(0.006, -0.008, 0.0); // |delta| = 0.01
    Cloud moved = grid;
    for (auto& p : moved)
        p += delta;
    CHECK(mvs::accuracy_distance(moved, grid, 20.0) == doctest::Approx(0.01).epsilon(1e-9));
    CHECK(mvs::completeness_distance(moved, grid, 20.0)
          == doctest::Approx(0.01).epsilon(1e-9));

    // clamping: one far point
    Cloud far_point = {Eigen::Vector3d(1000, 0, 0)};
    CHECK(mvs::accuracy_distance(far_point, grid, 20.0) == 20.0);

    // recon superset of gt has zero completeness
    Cloud superset = grid;
    superset.emplace_back(50, 50, 50);
    CHECK(mvs::completeness_distance(superset, grid, 100.0) == 0.0);

    CHECK_THROWS_AS(mvs::accuracy_distance({}, grid, 20.0), std::invalid_argument);
    CHECK_THROWS_AS(mvs::accuracy_distance(grid, {}, 20.0), std::invalid_argument);
}

TEST_CASE("metric symmetry: accuracy(A,B) equals completeness(B,A) bit-exactly")
{
    Rng rng(5);
    for (int trial = 0; trial < 5; ++trial)
    {
        Cloud a = random_cloud(rng, 300);
        Cloud b = random_cloud(rng, 200);
        CHECK(mvs::accuracy_distance(a, b, 7.0) == mvs::completeness_distance(b, a, 7.0));
    }
}

TEST_CASE("percentage metrics: identical, half coverage, disjoint")
{
    Cloud gt;
    for (int i = 0; i < 100; ++i)
        gt.emplace_back(i, 0, 0);

    const auto perfect = mvs::percentage_metrics(gt, gt, 1.0);
    CHECK(perfect.precision == 100.0);
    CHECK(perfect.recall == 100.0);
    CHECK(perfect.f_score == 100.0);

    Cloud half(gt.begin(), gt.begin() + 50);
    const auto partial = mvs::percentage_metrics(half, gt, 0.5);
    CHECK(partial.precision == 100.0);
    CHECK(partial.recall == 50.0);
    CHECK(partial.f_score == doctest::Approx(200.0 / 3.0).epsilon(1e-12));

    Cloud far = {{1000, 1000, 1000}, {2000, 0, 0}};
    const auto nothing = mvs::percentage_metrics(far, gt, 1.0);
    CHECK(nothing.precision == 0.0);
    CHECK(nothing.recall == 0.0);
    CHECK(nothing.f_score == 0.0);
}

TEST_CASE("percentage metrics: recall is monotone in recon growth; f <= 2 min(p,r)")
{
    Rng rng(8);
    Cloud gt = random_cloud(rng, 200, 5.0);
    Cloud recon = random_cloud(rng, 50, 5.0);
    double prev_recall = -1.0;
    for (int round = 0; round < 4; ++round)
    {
        const auto m = mvs::percentage_metrics(recon, gt, 1.0);
        CHECK(m.recall >= prev_recall);
        CHECK(m.f_score <= 2.0 * std::min(m.precision, m.recall) + 1e-12);
        prev_recall = m.recall;
        for (int add = 0; add < 50; ++add)
            recon.push_back(gt[rng.uniform_int(gt.size())]); // extend recon
    }
}

TEST_CASE("report: overall is the mean of accuracy and completeness")
{
    Rng rng(11);
    Cloud recon = random_cloud(rng, 150, 2.0);
    Cloud gt = random_cloud(rng, 170, 2.0);
    const auto report = mvs::evaluate_clouds(recon, gt, 20.0, {1.0, 2.0});
    CHECK(report.overall
          == doctest::Approx(0.5 * (report.mean_accuracy + report.mean_completeness))
                 .epsilon(1e-15));
    REQUIRE(report.percentages.size() == 2);
    for (const auto& p : report.percentages)
    {
        CHECK(p.precision >= 0.0);
        CHECK(p.precision <= 100.0);
        CHECK(p.recall >= 0.0);
        CHECK(p.recall <= 100.0);
    }
    const std::string table = mvs::report_table(report);
    CHECK(table.find("mean accuracy") != std::string::npos);
    const std::string kv = mvs::report_kv(report);
    CHECK(kv.find("overall = ") != std::string::npos);
    CHECK(kv.find("f_score@2 = ") != std::string::npos);
}
