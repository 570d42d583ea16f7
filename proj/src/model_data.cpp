#include "bmat/model_data.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "bmat/errors.hpp"

namespace bmat {

void EstimationWindow::validate() const {
    if (last_year <= first_year) throw InputError("estimation window must span at least two years");
    if (anchor_year < first_year || anchor_year > last_year) {
        throw InputError("anchor year must lie inside the estimation window");
    }
}

int ModelData::country_index(const std::string& code) const {
    for (std::size_t i = 0; i < countries.size(); ++i) {
        if (countries[i].code == code) return static_cast<int>(i);
    }
    return -1;
}

bool ModelData::has_misc(bool dhs) const {
    return std::any_of(obs.begin(), obs.end(),
                       [&](const ObsTerm& o) { return o.kind == ObsKind::misc && o.is_dhs == dhs; });
}

namespace {

void attach_observations(ModelData& data, const std::vector<ProcessedObservation>& observations) {
    const auto& w = data.window;
    data.obs.clear();
    data.slots.clear();
    data.source = observations;
    for (auto& c : data.countries) c.obs.clear();
    std::map<std::pair<int, int>, int> slot_of;

    for (std::size_t i = 0; i < observations.size(); ++i) {
        const auto& p = observations[i];
        const auto& o = p.obs;
        int c = data.country_index(o.country);
        if (c < 0) throw InputError("unknown country code '" + o.country + "'");
        const auto& cd = data.countries[static_cast<std::size_t>(c)];
        if (o.is_vr() && o.vr_type == VrType::excluded) continue;
        if (!(o.y > 0 && o.y < 1)) {
            throw InputError("observation row " + std::to_string(o.row) + " has pm outside (0,1)");
        }

        ObsTerm t;
        t.source = i;
        t.country = c;
        t.log_y = std::log(o.y);
        t.definition = o.definition;
        t.is_dhs = o.is_dhs;
        auto overlaps = year_overlaps(std::max(o.start, double(w.first_year)), std::min(o.end, double(w.last_year + 1)));
        if (overlaps.empty()) {
            throw InputError("observation row " + std::to_string(o.row) + " lies outside the estimation window");
        }
        t.first = overlaps.front().first - w.first_year;
        for (auto [year, frac] : overlaps) {
            auto j = static_cast<std::size_t>(year - w.first_year);
            t.weights.push_back(frac);
            t.deaths += frac * cd.deaths[j];
            t.births += frac * cd.births[j];
            t.aids_preg += frac * cd.aids_preg[j];
        }

        switch (o.source_type) {
            case SourceType::vr: {
                t.sigma2 = p.sigma * p.sigma;
                bool random = o.vr_type != VrType::I && p.g_upper > p.g && p.point_mass < 1.0;
                if (random) {
                    t.kind = ObsKind::vr_random;
                    int year = static_cast<int>(std::floor(o.ref_year));
                    auto key = std::make_pair(c, year);
                    auto it = slot_of.find(key);
                    if (it == slot_of.end()) {
                        it = slot_of.emplace(key, static_cast<int>(data.slots.size())).first;
                        data.slots.push_back({c, year, p.g, p.g_upper, p.point_mass});
                    }
                    t.slot = it->second;
                } else {
                    t.kind = ObsKind::vr_fixed;
                    t.gamma = p.g;
                }
                break;
            }
            case SourceType::specialized_study:
                t.kind = ObsKind::specialized;
                t.gamma = kSpecializedUnderreporting;
                t.sigma2 = p.sigma * p.sigma;
                break;
            default:
                t.kind = ObsKind::misc;
                t.gamma = kMiscUnderreporting;
                t.sigma2 = p.sigma * p.sigma;
                break;
        }
        if (!(t.sigma2 > 0) && t.kind != ObsKind::misc) {
            throw InputError("observation row " + std::to_string(o.row) + " has zero error variance");
        }
        data.countries[static_cast<std::size_t>(c)].obs.push_back(static_cast<int>(data.obs.size()));
        data.obs.push_back(std::move(t));
    }
}

}  // namespace

ModelData build_model_data(const std::vector<ProcessedObservation>& observations, const EnvelopeTable& env,
                           const EstimationWindow& window, const AidsParams& aids) {
    window.validate();
    aids.validate();
    ModelData data;
    data.window = window;
    data.aids = aids;
    std::map<std::string, int> region_index;
    for (const auto& info : env.countries()) {
        if (!region_index.count(info.region)) {
            region_index.emplace(info.region, 0);
        }
    }
    int r = 0;
    for (auto& [name, idx] : region_index) {
        idx = r++;
        data.regions.push_back(name);
    }
    for (const auto& info : env.countries()) {
        CountryData cd;
        cd.code = info.code;
        cd.region = region_index.at(info.region);
        cd.is_ssa = info.is_ssa;
        cd.group = info.mdg_group;
        for (int year = window.first_year; year <= window.last_year; ++year) {
            const auto& e = env.at(info.code, year);
            double dam = aids_maternal_deaths(e.aids_deaths, e.gfr, aids);
            double dap = pregnancy_related_aids_deaths(e.aids_deaths, e.gfr, aids);
            double nonaids = e.deaths - e.aids_deaths;
            if (!(nonaids > 0)) {
                throw InputError("non-AIDS deaths not positive for " + info.code + " " + std::to_string(year));
            }
            cd.births.push_back(e.births);
            cd.deaths.push_back(e.deaths);
            cd.nonaids_deaths.push_back(nonaids);
            cd.log_nonaids_deaths.push_back(std::log(nonaids));
            cd.aids_deaths.push_back(e.aids_deaths);
            cd.aids_maternal.push_back(dam);
            cd.aids_preg.push_back(dap);
            cd.log_gdp.push_back(std::log(e.gdp));
            cd.log_gfr.push_back(std::log(e.gfr));
            cd.sab.push_back(e.sab);
        }
        data.countries.push_back(std::move(cd));
    }
    attach_observations(data, observations);
    return data;
}

ModelData with_observations(const ModelData& base, const std::vector<ProcessedObservation>& observations) {
    ModelData data = base;
    attach_observations(data, observations);
    return data;
}

}  // namespace bmat
