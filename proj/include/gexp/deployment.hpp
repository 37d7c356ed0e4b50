#pragma once

#include <filesystem>
#include <string_view>

#include "gexp/host.hpp"

namespace gexp {

struct Deployment {
  HostEnvPtr env;
  // Value of the last top-level form.
  GexpRef gexp;
};

// Top-level forms are `(define sym expr)`, `(define (f args…) body…)`,
// `(define-package sym (package …))` and plain expressions. The last form
// must yield a gexp.
Deployment load_deployment_text(std::string_view text, const HostOptions& options);
Deployment load_deployment(const std::filesystem::path& file, HostOptions options);

}  // namespace gexp
