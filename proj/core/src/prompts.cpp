#include "mango/prompts.hpp"

#include <array>

namespace mango::prompts {

std::span<const TemplateInfo> catalog() {
  static constexpr std::array<TemplateInfo, 10> kCatalog{{
      {"assertion.concept_entry", "1", Origin::kPublished},
      {"assertion.culture_entry", "1", Origin::kPublished},
      {"assertion.json_format", "1", Origin::kAuthored},
      {"seed.judgment", "1", Origin::kAuthored},
      {"representative", "1", Origin::kPublished},
      {"representative.json_format", "1", Origin::kAuthored},
      {"narrative", "1", Origin::kPublished},
      {"narrative.participants", "1", Origin::kAuthored},
      {"dialogue.seed", "1", Origin::kAuthored},
      {"dialogue.tasks", "1", Origin::kAuthored},
  }};
  return kCatalog;
}

}  // namespace mango::prompts
