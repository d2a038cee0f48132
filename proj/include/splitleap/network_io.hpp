#pragma once

#include <array>
#include <filesystem>
#include <string>

#include "splitleap/network.hpp"

namespace splitleap {

/// Parses { "species": [...], "reactions": [ {"reactants": {...}, "products": {...},
/// "rate": x}, ... ] }. Errors name the offending reaction index.
ReactionNetwork parse_network_json(const std::string& text);
ReactionNetwork load_network(const std::filesystem::path& path);
std::string network_to_json(const ReactionNetwork& network);

// Networks used throughout the tests and examples.

/// S1 <-> S2 with forward rate c1 and backward rate c2.
ReactionNetwork isomerization_network(double c1, double c2);
/// S1 <-> S2 <-> S3 <-> S4, channels ordered (1->2, 2->1, 2->3, 3->2, 3->4, 4->3).
ReactionNetwork monomolecular_chain(const std::array<double, 6>& rates);
/// S1+S2 <-> S3, S1+S3 <-> S2, S2+S3 <-> S1.
ReactionNetwork stiff_nonlinear_network(const std::array<double, 6>& rates);
ReactionNetwork stiff_nonlinear_network();

}  // namespace splitleap
