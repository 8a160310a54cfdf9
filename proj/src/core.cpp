#include "vaxmed/core.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace vaxmed {

MediatorSupport::MediatorSupport(std::vector<std::string> levels) : levels_(std::move(levels)) {
  if (levels_.empty() || levels_.front() != kUndetectable) {
    throw ValidationError("mediator support must start with the undetectable level \"neg\"");
  }
  if (static_cast<int>(levels_.size()) > kMaxSupportLevels) {
    throw ValidationError("mediator support exceeds " + std::to_string(kMaxSupportLevels) +
                          " levels");
  }
  std::set<std::string> seen;
  for (const auto& l : levels_) {
    if (l.empty()) throw ValidationError("empty mediator level name");
    if (!seen.insert(l).second) throw ValidationError("duplicate mediator level \"" + l + "\"");
  }
}

MediatorSupport MediatorSupport::binary() { return MediatorSupport({kUndetectable, "1"}); }

MediatorSupport MediatorSupport::with_detectable(int detectable_count) {
  std::vector<std::string> levels{kUndetectable};
  for (int i = 1; i <= detectable_count; ++i) levels.push_back(std::to_string(i));
  return MediatorSupport(std::move(levels));
}

int MediatorSupport::index_of(const std::string& name) const {
  auto it = std::find(levels_.begin(), levels_.end(), name);
  return it == levels_.end() ? -1 : static_cast<int>(it - levels_.begin());
}

std::string describe(const ValidationResult& violations) {
  std::ostringstream os;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) os << "; ";
    os << violations[i].invariant;
    if (!violations[i].subject.empty()) os << " [" << violations[i].subject << "]";
  }
  return os.str();
}

}  // namespace vaxmed
