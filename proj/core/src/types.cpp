#include "esiaudit/types.hpp"

namespace esiaudit {

std::string_view to_string(Gender g) { return g == Gender::F ? "F" : "M"; }

std::string_view to_string(Race r) {
  switch (r) {
    case Race::White: return "White";
    case Race::Black: return "Black";
    case Race::Hispanic: return "Hispanic";
    case Race::Asian: return "Asian";
    case Race::Other: return "Other";
    case Race::Unknown: return "Unknown";
  }
  return "Unknown";
}

std::string_view to_string(Disposition d) {
  switch (d) {
    case Disposition::Admitted: return "ADMITTED";
    case Disposition::Home: return "HOME";
    case Disposition::Expired: return "EXPIRED";
    case Disposition::Transfer: return "TRANSFER";
    case Disposition::Lwbs: return "LEFT WITHOUT BEING SEEN";
    case Disposition::Ama: return "LEFT AGAINST MEDICAL ADVICE";
    case Disposition::Eloped: return "ELOPED";
    case Disposition::Other: return "OTHER";
  }
  return "OTHER";
}

std::string_view to_string(ComplaintCategory c) {
  switch (c) {
    case ComplaintCategory::ChestPain: return "ChestPain";
    case ComplaintCategory::AbdominalPain: return "AbdominalPain";
    case ComplaintCategory::Psychiatric: return "Psychiatric";
    case ComplaintCategory::Trauma: return "Trauma";
    case ComplaintCategory::Respiratory: return "Respiratory";
    case ComplaintCategory::Neurological: return "Neurological";
    case ComplaintCategory::PainOther: return "PainOther";
    case ComplaintCategory::GeneralMedical: return "GeneralMedical";
  }
  return "GeneralMedical";
}

std::string_view to_string(AgeBand b) {
  switch (b) {
    case AgeBand::From18to44: return "18-44";
    case AgeBand::From45to64: return "45-64";
    case AgeBand::From65up: return "65+";
  }
  return "18-44";
}

Gender gender_from_string(std::string_view s) {
  if (s == "F") return Gender::F;
  if (s == "M") return Gender::M;
  throw std::invalid_argument("unknown gender: " + std::string(s));
}

Race race_from_string(std::string_view s) {
  if (s == "White") return Race::White;
  if (s == "Black") return Race::Black;
  if (s == "Hispanic") return Race::Hispanic;
  if (s == "Asian") return Race::Asian;
  if (s == "Other") return Race::Other;
  if (s == "Unknown") return Race::Unknown;
  throw std::invalid_argument("unknown race: " + std::string(s));
}

Disposition disposition_from_string(std::string_view s) {
  if (s == "ADMITTED") return Disposition::Admitted;
  if (s == "HOME") return Disposition::Home;
  if (s == "EXPIRED") return Disposition::Expired;
  if (s == "TRANSFER") return Disposition::Transfer;
  if (s == "LEFT WITHOUT BEING SEEN") return Disposition::Lwbs;
  if (s == "LEFT AGAINST MEDICAL ADVICE" || s == "AGAINST MEDICAL ADVICE")
    return Disposition::Ama;
  if (s == "ELOPED") return Disposition::Eloped;
  if (s == "OTHER") return Disposition::Other;
  throw std::invalid_argument("unknown disposition: " + std::string(s));
}

ComplaintCategory category_from_string(std::string_view s) {
  if (s == "ChestPain") return ComplaintCategory::ChestPain;
  if (s == "AbdominalPain") return ComplaintCategory::AbdominalPain;
  if (s == "Psychiatric") return ComplaintCategory::Psychiatric;
  if (s == "Trauma") return ComplaintCategory::Trauma;
  if (s == "Respiratory") return ComplaintCategory::Respiratory;
  if (s == "Neurological") return ComplaintCategory::Neurological;
  if (s == "PainOther") return ComplaintCategory::PainOther;
  if (s == "GeneralMedical") return ComplaintCategory::GeneralMedical;
  throw std::invalid_argument("unknown complaint category: " + std::string(s));
}

AgeBand age_band_from_string(std::string_view s) {
  if (s == "18-44") return AgeBand::From18to44;
  if (s == "45-64") return AgeBand::From45to64;
  if (s == "65+") return AgeBand::From65up;
  throw std::invalid_argument("unknown age band: " + std::string(s));
}

}  // namespace esiaudit
