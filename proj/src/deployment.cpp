#include "gexp/deployment.hpp"

#include <fstream>
#include <sstream>

#include "gexp/lowerable.hpp"

namespace gexp {

namespace {

HostValue eval_define(const Sexp& form, const HostEnvPtr& env) {
  if (form.size() < 3) throw Error("malformed define: " + print_canonical(form));
  const Sexp& target = form[1];
  if (target.is_symbol()) {
    if (form.size() != 3) throw Error("malformed define: " + print_canonical(form));
    HostValue v = eval_host(form[2], env);
    env->define(target.symbol_name(), v);
    return v;
  }
  // (define (f . args) body…) is sugar for a lambda.
  if (!target.is_list() || target.size() == 0 || !target[0].is_symbol())
    throw Error("malformed define: " + print_canonical(form));
  SexpList lambda{Sexp::symbol("lambda"),
                  Sexp(SexpList(target.items().begin() + 1, target.items().end()))};
  lambda.insert(lambda.end(), form.items().begin() + 2, form.items().end());
  HostValue v = eval_host(Sexp(std::move(lambda)), env);
  env->define(target[0].symbol_name(), v);
  return v;
}

HostValue eval_define_package(const Sexp& form, const HostEnvPtr& env) {
  if (form.size() != 3 || !form[1].is_symbol())
    throw Error("malformed define-package: " + print_canonical(form));
  HostValue v = eval_host(form[2], env);
  auto* obj = v.get_if<ObjectRef>();
  if (!obj || (*obj)->type_tag() != Package::kTag)
    throw Error("define-package " + form[1].symbol_name() + ": expression did not yield a package");
  env->define(form[1].symbol_name(), v);
  return v;
}

}  // namespace

Deployment load_deployment_text(std::string_view text, const HostOptions& options) {
  const std::vector<Sexp> forms = read_all(text);
  if (forms.empty()) throw Error("deployment file is empty");
  auto builtins = HostEnv::make();
  install_host_builtins(*builtins, options);
  auto env = HostEnv::make(builtins);

  HostValue last;
  for (const Sexp& form : forms) {
    if (form.is_form("define"))
      last = eval_define(form, env);
    else if (form.is_form("define-package"))
      last = eval_define_package(form, env);
    else
      last = eval_host(form, env);
  }
  auto* g = last.get_if<GexpRef>();
  if (!g) throw Error("the last form of a deployment file must yield a gexp");
  return {env, *g};
}

Deployment load_deployment(const std::filesystem::path& file, HostOptions options) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("cannot read " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (options.base_dir == ".") options.base_dir = file.parent_path().empty() ? "." : file.parent_path();
  return load_deployment_text(buf.str(), options);
}

}  // namespace gexp
