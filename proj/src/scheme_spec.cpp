#include "splitleap/scheme_spec.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "splitleap/errors.hpp"

namespace splitleap {

namespace {

std::string format_value(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double parse_value(const std::string& text, const std::string& whole) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (text.empty() || ec != std::errc() || ptr != last || !std::isfinite(v))
    throw ParseError("scheme '" + whole + "': cannot parse value '" + text + "'");
  if (v < 0.0 || v > 1.0) throw ParseError("scheme '" + whole + "': value must lie in [0, 1]");
  return v;
}

}  // namespace

std::string SchemeSpec::canonical() const {
  switch (kind) {
    case SchemeKind::Ssa:
      return "ssa";
    case SchemeKind::Theta:
      return "theta:" + format_value(theta);
    case SchemeKind::SplitStep:
      return "split-step:" + format_value(theta);
    case SchemeKind::SlowScale:
      return "slow-scale";
  }
  return {};
}

SchemeSpec parse_scheme(const std::string& text) {
  if (text == "ssa") return {SchemeKind::Ssa, 0.0};
  if (text == "explicit") return {SchemeKind::Theta, 0.0};
  if (text == "implicit") return {SchemeKind::Theta, 1.0};
  if (text == "trapezoidal") return {SchemeKind::Theta, 0.5};
  if (text == "slow-scale") return {SchemeKind::SlowScale, 0.0};
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    const std::string head = text.substr(0, colon);
    const std::string value = text.substr(colon + 1);
    if (head == "theta") return {SchemeKind::Theta, parse_value(value, text)};
    if (head == "split-step") return {SchemeKind::SplitStep, parse_value(value, text)};
  }
  throw ParseError("unknown scheme '" + text +
                   "' (expected ssa, explicit, implicit, trapezoidal, theta:<v>, split-step:<v> or slow-scale)");
}

StepOutcome scheme_step(const ReactionNetwork& network, const SchemeSpec& spec, const Vector& y, double tau,
                        const SchemeParameters& params, RngStream& stream, const StepOptions& options) {
  switch (spec.kind) {
    case SchemeKind::Theta:
      return theta_step(network, y, tau, spec.theta, stream, options);
    case SchemeKind::SplitStep:
      return standard_split_step(network, y, tau, spec.theta, stream, options);
    case SchemeKind::SlowScale:
      return slow_scale_split_step(network, y, tau, params, stream, options);
    case SchemeKind::Ssa:
      break;
  }
  throw InvalidArgument("scheme_step: ssa is not a tau scheme");
}

}  // namespace splitleap
