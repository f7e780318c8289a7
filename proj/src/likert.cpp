#include "mpi/likert.hpp"

#include "mpi/inventory.hpp"

namespace mpi {

std::optional<Choice> choice_from_letter(char letter) {
  if (letter >= 'a' && letter <= 'e') letter = static_cast<char>(letter - 'a' + 'A');
  if (letter < 'A' || letter > 'E') return std::nullopt;
  return static_cast<Choice>(letter - 'A');
}

std::string option_text(Choice c) {
  return std::string("(") + choice_letter(c) + "). " + kLikertLabels[choice_index(c)];
}

}  // namespace mpi
