#include "bmat/types.hpp"

#include <string>

#include "bmat/errors.hpp"

namespace bmat {

std::string_view to_string(Definition d) {
    return d == Definition::maternal ? "maternal" : "pregnancy_related";
}

std::string_view to_string(SourceType s) {
    switch (s) {
        case SourceType::vr: return "vr";
        case SourceType::specialized_study: return "specialized_study";
        case SourceType::misc_maternal: return "misc_maternal";
        case SourceType::misc_pregnancy_related: return "misc_pregnancy_related";
    }
    return "?";
}

std::string_view to_string(VrType v) {
    switch (v) {
        case VrType::I: return "I";
        case VrType::II: return "II";
        case VrType::III: return "III";
        case VrType::excluded: return "excluded";
    }
    return "?";
}

std::string_view to_string(MdgGroup g) { return g == MdgGroup::developed ? "developed" : "developing"; }

std::string_view to_string(PmRoute r) {
    switch (r) {
        case PmRoute::counts: return "counts";
        case PmRoute::inquiry: return "inquiry";
        case PmRoute::reported_pm: return "reported_pm";
        case PmRoute::reported_mmr: return "reported_mmr";
    }
    return "?";
}

Definition parse_definition(std::string_view s) {
    if (s == "maternal") return Definition::maternal;
    if (s == "pregnancy_related") return Definition::pregnancy_related;
    throw InputError("unknown definition '" + std::string(s) + "'");
}

SourceType parse_source_type(std::string_view s) {
    if (s == "vr" || s == "vr_other") return SourceType::vr;
    if (s == "specialized_study") return SourceType::specialized_study;
    if (s == "misc_maternal") return SourceType::misc_maternal;
    if (s == "misc_pregnancy_related") return SourceType::misc_pregnancy_related;
    throw InputError("unknown source_type '" + std::string(s) + "'");
}

VrType parse_vr_type(std::string_view s) {
    if (s == "I") return VrType::I;
    if (s == "II") return VrType::II;
    if (s == "III") return VrType::III;
    if (s == "excluded" || s.empty()) return VrType::excluded;
    throw InputError("unknown vr_type '" + std::string(s) + "'");
}

MdgGroup parse_mdg_group(std::string_view s) {
    if (s == "developed") return MdgGroup::developed;
    if (s == "developing") return MdgGroup::developing;
    throw InputError("unknown mdg_group '" + std::string(s) + "'");
}

}  // namespace bmat
