#include <charconv>
#include <map>
#include <sstream>

#include "adavsr/degrade.hpp"

namespace adavsr {

namespace {

std::string shortest(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size()) throw Error("task line: bad number for " + key);
  return v;
}

}  // namespace

std::string format_task(const DegradationTask& task) {
  std::string line = "kind=" + to_string(task.kernel.kind);
  if (task.kernel.kind == KernelKind::aniso_gaussian) {
    line += " sigma1=" + shortest(task.kernel.sigma1);
    line += " sigma2=" + shortest(task.kernel.sigma2);
    line += " angle=" + shortest(task.kernel.angle);
    line += " support=" + std::to_string(task.kernel.support);
  }
  line += " temporal=" + to_string(task.temporal);
  return line;
}

DegradationTask parse_task(std::string_view line) {
  std::map<std::string, std::string> fields;
  std::istringstream in{std::string(line)};
  std::string token;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos || eq == 0) throw Error("task line: expected key=value, got '" + token + "'");
    if (!fields.emplace(token.substr(0, eq), token.substr(eq + 1)).second)
      throw Error("task line: duplicate key " + token.substr(0, eq));
  }
  auto take = [&](const std::string& key) {
    auto it = fields.find(key);
    if (it == fields.end()) throw Error("task line: missing " + key);
    std::string v = it->second;
    fields.erase(it);
    return v;
  };

  DegradationTask task;
  const std::string kind = take("kind");
  if (kind == "bicubic") {
    task.kernel = KernelSpec{};
  } else if (kind == "aniso_gaussian") {
    task.kernel.kind = KernelKind::aniso_gaussian;
    task.kernel.sigma1 = parse_double("sigma1", take("sigma1"));
    task.kernel.sigma2 = parse_double("sigma2", take("sigma2"));
    task.kernel.angle = parse_double("angle", take("angle"));
    task.kernel.support = static_cast<int>(parse_double("support", take("support")));
  } else {
    throw Error("task line: unknown kind " + kind);
  }
  const std::string temporal = take("temporal");
  if (temporal == "alternate") {
    task.temporal = TemporalOp::alternate;
  } else if (temporal == "average3") {
    task.temporal = TemporalOp::average3;
  } else {
    throw Error("task line: unknown temporal op " + temporal);
  }
  if (!fields.empty()) throw Error("task line: unknown key " + fields.begin()->first);
  validate(task.kernel);
  return task;
}

}  // namespace adavsr
