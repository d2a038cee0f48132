#include "splitleap/network_io.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "splitleap/errors.hpp"

namespace splitleap {

using nlohmann::json;

namespace {

std::vector<int> read_side(const json& side, const std::map<std::string, std::size_t>& index,
                           std::size_t n, std::size_t r, const char* what) {
  std::vector<int> coeffs(n, 0);
  if (side.is_null()) return coeffs;
  if (!side.is_object()) {
    std::ostringstream msg;
    msg << "reaction " << r << ": \"" << what << "\" must be an object";
    throw ParseError(msg.str());
  }
  for (const auto& [name, value] : side.items()) {
    auto it = index.find(name);
    if (it == index.end()) {
      std::ostringstream msg;
      msg << "reaction " << r << ": unknown species \"" << name << "\" in " << what;
      throw ParseError(msg.str());
    }
    if (!value.is_number_integer() || value.get<long long>() < 0) {
      std::ostringstream msg;
      msg << "reaction " << r << ": coefficient of \"" << name << "\" in " << what
          << " must be a nonnegative integer";
      throw ParseError(msg.str());
    }
    coeffs[it->second] += value.get<int>();
  }
  return coeffs;
}

}  // namespace

ReactionNetwork parse_network_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("network JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("species") || !doc["species"].is_array())
    throw ParseError("network JSON: missing \"species\" array");
  if (!doc.contains("reactions") || !doc["reactions"].is_array())
    throw ParseError("network JSON: missing \"reactions\" array");

  std::vector<std::string> species;
  std::map<std::string, std::size_t> index;
  for (const auto& s : doc["species"]) {
    if (!s.is_string()) throw ParseError("network JSON: species names must be strings");
    const auto name = s.get<std::string>();
    if (!index.emplace(name, species.size()).second)
      throw ParseError("network JSON: duplicate species \"" + name + "\"");
    species.push_back(name);
  }

  std::vector<Reaction> reactions;
  std::size_t r = 0;
  for (const auto& entry : doc["reactions"]) {
    if (!entry.is_object()) {
      std::ostringstream msg;
      msg << "reaction " << r << ": must be an object";
      throw ParseError(msg.str());
    }
    Reaction rx;
    rx.reactants = read_side(entry.value("reactants", json()), index, species.size(), r, "reactants");
    rx.products = read_side(entry.value("products", json()), index, species.size(), r, "products");
    if (!entry.contains("rate") || !entry["rate"].is_number()) {
      std::ostringstream msg;
      msg << "reaction " << r << ": missing numeric \"rate\"";
      throw ParseError(msg.str());
    }
    rx.rate = entry["rate"].get<double>();
    if (!(rx.rate > 0.0)) {
      std::ostringstream msg;
      msg << "reaction " << r << ": rate must be positive";
      throw ParseError(msg.str());
    }
    reactions.push_back(std::move(rx));
    ++r;
  }
  try {
    return ReactionNetwork(std::move(species), std::move(reactions));
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what());
  }
}

ReactionNetwork load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open network file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_network_json(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string network_to_json(const ReactionNetwork& network) {
  json doc;
  doc["species"] = network.species();
  json reactions = json::array();
  for (const Reaction& rx : network.reactions()) {
    json entry;
    entry["reactants"] = json::object();
    entry["products"] = json::object();
    for (std::size_t i = 0; i < network.n_species(); ++i) {
      if (rx.reactants[i] > 0) entry["reactants"][network.species()[i]] = rx.reactants[i];
      if (rx.products[i] > 0) entry["products"][network.species()[i]] = rx.products[i];
    }
    entry["rate"] = rx.rate;
    reactions.push_back(entry);
  }
  doc["reactions"] = reactions;
  return doc.dump(2);
}

namespace {

Reaction make_reaction(std::size_t n, std::initializer_list<std::size_t> in,
                       std::initializer_list<std::size_t> out, double rate) {
  Reaction rx;
  rx.reactants.assign(n, 0);
  rx.products.assign(n, 0);
  for (std::size_t i : in) ++rx.reactants[i];
  for (std::size_t i : out) ++rx.products[i];
  rx.rate = rate;
  return rx;
}

}  // namespace

ReactionNetwork isomerization_network(double c1, double c2) {
  return ReactionNetwork({"S1", "S2"}, {make_reaction(2, {0}, {1}, c1), make_reaction(2, {1}, {0}, c2)});
}

ReactionNetwork monomolecular_chain(const std::array<double, 6>& c) {
  return ReactionNetwork({"S1", "S2", "S3", "S4"},
                         {make_reaction(4, {0}, {1}, c[0]), make_reaction(4, {1}, {0}, c[1]),
                          make_reaction(4, {1}, {2}, c[2]), make_reaction(4, {2}, {1}, c[3]),
                          make_reaction(4, {2}, {3}, c[4]), make_reaction(4, {3}, {2}, c[5])});
}

ReactionNetwork stiff_nonlinear_network(const std::array<double, 6>& c) {
  return ReactionNetwork({"S1", "S2", "S3"},
                         {make_reaction(3, {0, 1}, {2}, c[0]), make_reaction(3, {2}, {0, 1}, c[1]),
                          make_reaction(3, {0, 2}, {1}, c[2]), make_reaction(3, {1}, {0, 2}, c[3]),
                          make_reaction(3, {1, 2}, {0}, c[4]), make_reaction(3, {0}, {1, 2}, c[5])});
}

ReactionNetwork stiff_nonlinear_network() {
  return stiff_nonlinear_network({1e3, 1e3, 1e-5, 10.0, 1.0, 1e6});
}

}  // namespace splitleap
