#pragma once

#include <memory>
#include <optional>
#include <string>

namespace gexp {

// System type such as "x86_64-linux": `<cpu>-<kernel>`.
class SystemTag {
 public:
  explicit SystemTag(std::string text);

  const std::string& str() const { return text_; }
  bool operator==(const SystemTag&) const = default;
  auto operator<=>(const SystemTag&) const = default;

 private:
  std::string text_;
};

using Target = std::optional<SystemTag>;

inline const SystemTag& default_system() {
  static const SystemTag kDefault("x86_64-linux");
  return kDefault;
}

// A high-level value that a gexp compiler can lower to a store item.
// Objects are compared by identity.
class Object {
 public:
  virtual ~Object() = default;
  virtual std::string type_tag() const = 0;
  virtual std::string describe() const { return "#<" + type_tag() + ">"; }
};

using ObjectRef = std::shared_ptr<const Object>;

}  // namespace gexp
