#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bmat/envelope.hpp"
#include "bmat/errors.hpp"
#include "bmat/ingest.hpp"
#include "test_util.hpp"

using namespace bmat;

namespace {

const char* kEnvHeader = "country,year,births,deaths,aids_deaths,gdp,gfr,sab,region,is_ssa,mdg_group\n";
const char* kObsHeader =
    "country,start,end,definition,source_type,is_dhs,maternal_deaths,all_cause_deaths,births,reported_pm,"
    "reported_mmr,sampling_error,prop_ill_defined\n";

EnvelopeTable small_env() {
    std::vector<CountryYearEnvelope> rows;
    double deaths[] = {100, 200, 100, 100};
    for (int k = 0; k < 4; ++k) {
        CountryYearEnvelope e;
        e.country = "AAA";
        e.year = 2000 + k;
        e.births = 50000;
        e.deaths = deaths[k];
        e.aids_deaths = 10;
        e.gdp = 1000;
        e.gfr = 0.1;
        e.sab = 0.5;
        e.region = "R";
        rows.push_back(e);
    }
    return EnvelopeTable(rows);
}

std::string env_csv() {
    std::string s = kEnvHeader;
    for (int y = 2000; y <= 2005; ++y) {
        s += "AAA," + std::to_string(y) + ",50000,4000,0,1000,0.1,0.5,R1,0,developing\n";
    }
    return s;
}

}  // namespace

TEST_CASE("aggregate_envelope prorates partial years linearly") {
    auto env = small_env();
    CHECK(aggregate_envelope(env, "AAA", 2000.0, 2001.0).deaths == doctest::Approx(100));
    CHECK(aggregate_envelope(env, "AAA", 2000.5, 2001.5).deaths == doctest::Approx(150));
    CHECK(aggregate_envelope(env, "AAA", 2001.0, 2004.0).deaths == doctest::Approx(400));
    CHECK_THROWS_AS(aggregate_envelope(env, "AAA", 2003.0, 2005.0), InputError);
}

TEST_CASE("aggregate_envelope over whole years equals the sum of single years") {
    auto env = small_env();
    double sum = 0;
    for (int y = 2000; y < 2004; ++y) sum += aggregate_envelope(env, "AAA", y, y + 1).deaths;
    CHECK(aggregate_envelope(env, "AAA", 2000, 2004).deaths == doctest::Approx(sum).epsilon(1e-14));
}

TEST_CASE("derive_pm routes") {
    EnvelopeAggregate agg{4000, 50000, 0};
    RawRecord r;
    r.country = "AAA";
    r.period_start = 2000;
    r.period_end = 2001;

    SUBCASE("counts") {
        r.source_type = SourceType::misc_maternal;
        r.maternal_deaths = 10;
        r.all_cause_deaths = 100;
        CHECK(derive_pm(r, agg).y == doctest::Approx(0.10));
    }
    SUBCASE("reported mmr converted with envelope births and deaths") {
        r.source_type = SourceType::misc_maternal;
        r.reported_mmr = 200.0 / 100000.0;
        CHECK(derive_pm(r, agg).y == doctest::Approx(0.025).epsilon(1e-14));
    }
    SUBCASE("inquiry rule ignores the study's own all-cause deaths") {
        r.source_type = SourceType::specialized_study;
        r.maternal_deaths = 30;
        r.all_cause_deaths = 900;
        EnvelopeAggregate a{1000, 50000, 0};
        auto o = derive_pm(r, a);
        CHECK(o.y == doctest::Approx(0.03).epsilon(1e-14));
        CHECK(o.route == PmRoute::inquiry);
    }
    SUBCASE("reported pm wins over reported mmr") {
        r.source_type = SourceType::misc_maternal;
        r.reported_pm = 0.04;
        r.reported_mmr = 0.001;
        CHECK(derive_pm(r, agg).y == 0.04);
    }
    SUBCASE("pm of one or more is rejected") {
        r.source_type = SourceType::misc_maternal;
        r.maternal_deaths = 100;
        r.all_cause_deaths = 100;
        CHECK_THROWS_AS(derive_pm(r, agg), RecordRejected);
    }
    SUBCASE("zero deaths outside vr is rejected") {
        r.source_type = SourceType::misc_maternal;
        r.maternal_deaths = 0;
        r.all_cause_deaths = 100;
        CHECK_THROWS_AS(derive_pm(r, agg), RecordRejected);
    }
}

TEST_CASE("derive_pm is idempotent on stored fields") {
    EnvelopeAggregate agg{4000, 50000, 0};
    RawRecord r;
    r.country = "AAA";
    r.period_start = 2000;
    r.period_end = 2002;
    r.source_type = SourceType::misc_pregnancy_related;
    r.definition = Definition::pregnancy_related;
    r.reported_mmr = 0.003;
    auto o = derive_pm(r, agg);
    RawRecord again = r;
    again.reported_mmr = o.reported_mmr;
    CHECK(derive_pm(again, agg).y == o.y);
}

TEST_CASE("load_database on a well-formed fixture") {
    testutil::TempDir dir("ingest");
    testutil::write_file(dir / "envelopes.csv", env_csv());
    testutil::write_file(dir / "observations.csv",
                         std::string(kObsHeader) +
                             "AAA,2000,2001,maternal,vr,0,10,3800,,,,,0.05\n"
                             "AAA,2001,2003,maternal,misc_maternal,1,,,,0.02,,0.2,\n"
                             "AAA,2002,2003,maternal,specialized_study,0,12,,,,,0.1,\n");
    auto db = load_database(dir / "observations.csv", dir / "envelopes.csv");
    CHECK(db.records.size() == 3);
    CHECK(db.rejections.empty());
    auto res = derive_observations(db);
    CHECK(res.observations.size() == 3);
    CHECK(res.observations.size() + res.rejections.size() == res.input_rows);
}

TEST_CASE("bad period goes to the rejection report") {
    testutil::TempDir dir("ingest");
    testutil::write_file(dir / "envelopes.csv", env_csv());
    testutil::write_file(dir / "observations.csv",
                         std::string(kObsHeader) + "AAA,2001,2001,maternal,misc_maternal,0,,,,0.02,,0.2,\n"
                                                   "AAA,2001,2002,maternal,misc_maternal,0,,,,0.02,,0.2,\n");
    auto db = load_database(dir / "observations.csv", dir / "envelopes.csv");
    REQUIRE(db.rejections.size() == 1);
    CHECK(db.rejections[0].reason == "bad period");
    CHECK(db.rejections[0].row == 1);
    CHECK(db.records.size() == 1);
}

TEST_CASE("record for a country missing from the envelopes is an error") {
    testutil::TempDir dir("ingest");
    testutil::write_file(dir / "envelopes.csv", env_csv());
    testutil::write_file(dir / "observations.csv",
                         std::string(kObsHeader) + "ZZZ,2001,2002,maternal,misc_maternal,0,,,,0.02,,0.2,\n");
    try {
        load_database(dir / "observations.csv", dir / "envelopes.csv");
        FAIL("expected InputError");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("unknown country code") != std::string::npos);
    }
}

TEST_CASE("missing file and malformed header are errors") {
    testutil::TempDir dir("ingest");
    testutil::write_file(dir / "envelopes.csv", env_csv());
    CHECK_THROWS_AS(load_database(dir / "nope.csv", dir / "envelopes.csv"), InputError);
    testutil::write_file(dir / "observations.csv", "country,start\nAAA,2000\n");
    CHECK_THROWS_AS(load_database(dir / "observations.csv", dir / "envelopes.csv"), InputError);
    testutil::write_file(dir / "observations.csv",
                         std::string(kObsHeader) + "AAA,20x1,2002,maternal,misc_maternal,0,,,,0.02,,0.2,\n");
    CHECK_THROWS_AS(load_database(dir / "observations.csv", dir / "envelopes.csv"), InputError);
}

TEST_CASE("vr rows need prop_ill_defined") {
    testutil::TempDir dir("ingest");
    testutil::write_file(dir / "envelopes.csv", env_csv());
    testutil::write_file(dir / "observations.csv",
                         std::string(kObsHeader) + "AAA,2000,2001,maternal,vr,0,10,3800,,,,,\n");
    auto db = load_database(dir / "observations.csv", dir / "envelopes.csv");
    CHECK(db.records.empty());
    CHECK(db.rejections.size() == 1);
}

TEST_CASE("observations round trip through csv") {
    testutil::TempDir dir("ingest");
    testutil::write_file(dir / "envelopes.csv", env_csv());
    testutil::write_file(dir / "observations.csv",
                         std::string(kObsHeader) + "AAA,2000.25,2001.75,pregnancy_related,misc_pregnancy_related,1,,,,,"
                                                   "0.0031,0.2,\n");
    auto res = derive_observations(load_database(dir / "observations.csv", dir / "envelopes.csv"));
    write_observations(dir / "acc.csv", res.observations);
    auto back = read_observations(dir / "acc.csv");
    REQUIRE(back.size() == 1);
    CHECK(back[0].y == res.observations[0].y);
    CHECK(back[0].env_deaths == res.observations[0].env_deaths);
    CHECK(back[0].definition == Definition::pregnancy_related);
    CHECK(back[0].is_dhs);
}
