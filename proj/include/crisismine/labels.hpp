#pragma once

#include <array>
#include <string>

#include "crisismine/util/error.hpp"

namespace cm {

// The eight activity-concern categories, canonical order fixed.
enum class ActivityLabel : int {
    CommutingToWork = 0,
    SchoolTrips = 1,
    ShoppingErrands = 2,
    SocialRecreational = 3,
    MedicalDental = 4,
    Evacuation = 5,
    OtherPurposes = 6,
    NonTravelStayHome = 7,
};

inline constexpr int kNumActivityLabels = 8;

inline const std::array<std::string, 8>& activity_label_names() {
    static const std::array<std::string, 8> names = {
        "CommutingToWork", "SchoolTrips",   "ShoppingErrands", "SocialRecreational",
        "MedicalDental",   "Evacuation",    "OtherPurposes",   "NonTravelStayHome"};
    return names;
}

inline const std::string& to_string(ActivityLabel l) {
    return activity_label_names()[static_cast<int>(l)];
}

inline ActivityLabel activity_label_from_string(const std::string& s) {
    const auto& names = activity_label_names();
    for (int i = 0; i < kNumActivityLabels; ++i)
        if (names[i] == s) return static_cast<ActivityLabel>(i);
    throw DataError("unknown activity label: " + s);
}

}  // namespace cm
