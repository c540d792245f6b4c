#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace esiaudit {

enum class Gender : uint8_t { F, M };

enum class Race : uint8_t { White, Black, Hispanic, Asian, Other, Unknown };

enum class Disposition : uint8_t {
  Admitted,
  Home,
  Expired,
  Transfer,
  Lwbs,
  Ama,
  Eloped,
  Other,
};

// Priority order matters: categorize_complaint() tests categories in this
// exact order and the first keyword hit wins.
enum class ComplaintCategory : uint8_t {
  ChestPain,
  AbdominalPain,
  Psychiatric,
  Trauma,
  Respiratory,
  Neurological,
  PainOther,
  GeneralMedical,
};

enum class AgeBand : uint8_t { From18to44, From45to64, From65up };

inline Gender opposite(Gender g) { return g == Gender::F ? Gender::M : Gender::F; }

inline AgeBand age_band_of(int age) {
  if (age < 45) return AgeBand::From18to44;
  if (age < 65) return AgeBand::From45to64;
  return AgeBand::From65up;
}

std::string_view to_string(Gender g);
std::string_view to_string(Race r);
std::string_view to_string(Disposition d);
std::string_view to_string(ComplaintCategory c);
std::string_view to_string(AgeBand b);

Gender gender_from_string(std::string_view s);
Race race_from_string(std::string_view s);
Disposition disposition_from_string(std::string_view s);
ComplaintCategory category_from_string(std::string_view s);
AgeBand age_band_from_string(std::string_view s);

inline constexpr int kEsiLevels = 5;

inline bool admitted_outcome(Disposition d) {
  return d == Disposition::Admitted || d == Disposition::Transfer ||
         d == Disposition::Expired;
}

}  // namespace esiaudit
