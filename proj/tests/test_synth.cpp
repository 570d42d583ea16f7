#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bmat/errors.hpp"
#include "bmat/ingest.hpp"
#include "bmat/sbc.hpp"
#include "bmat/synth.hpp"
#include "bmat/vr_preprocess.hpp"
#include "test_util.hpp"

using namespace bmat;

namespace {

SynthConfig small_world() {
    SynthConfig cfg;
    cfg.n_countries = 4;
    cfg.n_regions = 2;
    cfg.first_year = 1995;
    cfg.last_year = 2010;
    cfg.anchor_year = 2000;
    cfg.vr_first_year = 2000;
    return cfg;
}

}  // namespace

TEST_CASE("noiseless world reproduces the true proportions exactly") {
    auto cfg = small_world();
    cfg.zero_noise = true;
    cfg.flat_distortion = true;
    auto w = generate_world(cfg, 3);
    for (const auto& c : w.truth.distortion) {
        for (double d : c) CHECK(d == 0.0);
    }
    auto dq = assemble_mmr(w.truth, w.data);
    int checked = 0;
    for (const auto& r : w.records) {
        int c = w.data.country_index(r.country);
        const auto& cd = w.data.countries[static_cast<std::size_t>(c)];
        const auto& d = dq.countries[static_cast<std::size_t>(c)];
        if (r.source_type != SourceType::specialized_study && r.source_type != SourceType::misc_maternal &&
            r.source_type != SourceType::vr) {
            continue;
        }
        if (r.period_end - r.period_start != 1.0) continue;
        auto j = static_cast<std::size_t>(r.period_start - cfg.first_year);
        double pm = d.deaths[j] / cd.deaths[j];
        double y = r.reported_pm ? *r.reported_pm : *r.maternal_deaths / *r.all_cause_deaths;
        double gamma = r.source_type == SourceType::specialized_study ? 1.0 : 1.5;
        CHECK(y * gamma == doctest::Approx(pm).epsilon(1e-12));
        ++checked;
    }
    CHECK(checked > 10);
}

TEST_CASE("worlds are seeded") {
    auto cfg = small_world();
    auto a = generate_world(cfg, 9), b = generate_world(cfg, 9), c = generate_world(cfg, 10);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].reported_pm == b.records[i].reported_pm);
        CHECK(a.records[i].maternal_deaths == b.records[i].maternal_deaths);
    }
    CHECK(a.true_mmr == b.true_mmr);
    CHECK(a.true_mmr != c.true_mmr);
}

TEST_CASE("initial distortions have the stationary variance") {
    SynthConfig cfg;
    cfg.n_countries = 40000;
    cfg.n_empty = cfg.n_countries;
    cfg.first_year = 2000;
    cfg.last_year = 2003;
    cfg.anchor_year = 2000;
    cfg.with_aids = false;
    cfg.truth.phi = 0.7;
    cfg.truth.theta = -0.4;
    cfg.truth.sqrt_gamma0 = 0.02;
    cfg.truth.sigma_lambda = 0.3;
    auto w = generate_world(cfg, 21);
    double sum = 0, sum2 = 0;
    for (std::size_t c = 0; c < w.truth.distortion.size(); ++c) {
        double z = w.truth.distortion[c][0] / std::sqrt(w.truth.country_scale(c).gamma0);
        sum += z;
        sum2 += z * z;
    }
    double n = double(w.truth.distortion.size());
    double var = (sum2 - sum * sum / n) / (n - 1);
    CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("generated files pass through ingest and preprocessing") {
    auto cfg = small_world();
    auto w = generate_world(cfg, 4);
    testutil::TempDir dir("synth");
    write_world(dir.path(), w);
    for (const char* f : {"observations.csv", "envelopes.csv", "truth.csv", "truth_mmr.csv", "provenance.csv"}) {
        CHECK(std::filesystem::exists(dir / f));
    }
    auto db = load_database(dir / "observations.csv", dir / "envelopes.csv");
    CHECK(db.rejections.empty());
    REQUIRE(db.records.size() == w.records.size());
    auto derived = derive_observations(db);
    CHECK(derived.observations.size() + derived.rejections.size() == w.records.size());

    std::size_t vr = 0, other = 0;
    for (const auto& r : w.records) (r.source_type == SourceType::vr ? vr : other) += 1;
    auto pre = preprocess(derived.observations, db.envelopes, {});
    std::size_t vr_reported = 0;
    for (const auto& r : pre.report) vr_reported += r.source == "vr";
    CHECK(vr_reported == vr);
    std::size_t kept_other = 0;
    for (const auto& p : pre.observations) {
        if (p.obs.is_vr()) continue;
        ++kept_other;
        const auto& rec = w.records[p.obs.row - 1];
        CHECK(p.obs.y == doctest::Approx(*rec.reported_pm).epsilon(1e-15));
    }
    // non-VR sources are only dropped when they fall outside the window, which never happens here
    CHECK(kept_other == other);
}

TEST_CASE("calibration with a single replication has no uniformity statistic") {
    SbcConfig cfg;
    cfg.world = small_world();
    cfg.world.exact = true;
    cfg.world.n_countries = 2;
    cfg.world.first_year = 1998;
    cfg.world.last_year = 2006;
    cfg.world.anchor_year = 2000;
    cfg.world.vr_first_year = 1998;
    cfg.coverage_year = 2004;
    cfg.replications = 1;
    cfg.threads = 1;
    cfg.sampler.n_chains = 2;
    cfg.sampler.n_iterations = 700;
    cfg.sampler.burn_in = 200;
    cfg.sampler.thin = 5;
    cfg.sampler.parallel = false;
    auto report = sbc_run(cfg);
    REQUIRE(report.replications.size() == 1);
    CHECK(report.replications[0].cells == 2);
    for (const auto& p : report.parameters) {
        int total = 0;
        for (int h : p.histogram) total += h;
        CHECK(total == 1);
        CHECK_FALSE(p.p_value);
        int rank = report.replications[0].ranks.at(p.parameter);
        CHECK(rank >= 0);
        CHECK(rank <= cfg.rank_draws);
    }
    cfg.replications = 0;
    CHECK_THROWS_AS(sbc_run(cfg), InputError);
}
