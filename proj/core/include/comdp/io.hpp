#pragma once

#include <string>

#include "comdp/decode.hpp"
#include "comdp/exact.hpp"
#include "comdp/mdp.hpp"
#include "comdp/problems.hpp"

namespace comdp {

// Instance JSON: {"kind": "ksp|tsp|spp", "d": ..., ...} with fields per kind
// (ksp adds n/m/c/w/b, tsp adds the cost matrix c, spp adds c/vSrc/vTgt).
std::string instance_to_json(const Instance& inst);
Instance instance_from_json(const std::string& text);
void write_instance(const std::string& path, const Instance& inst);
Instance read_instance(const std::string& path);

// Versioned little-endian binary dump of a built model. The source instance
// JSON rides along so downstream commands need only this one file.
void write_mdp(const std::string& path, const Mdp& mdp, const Instance& inst);
struct MdpFile {
    Mdp mdp;
    Instance instance;
};
MdpFile read_mdp(const std::string& path);

// Value functions serialize as a plain JSON array indexed by state.
void write_value(const std::string& path, const ValueFunction& v);
ValueFunction read_value(const std::string& path);

std::string report_to_json(const ValidationReport& report);
void write_report(const std::string& path, const ValidationReport& report);

std::string transcript_to_json(const Mdp& mdp, const DecodeTranscript& transcript,
                               const Solution& solution);
void write_transcript(const std::string& path, const Mdp& mdp, const DecodeTranscript& transcript,
                      const Solution& solution);

} // namespace comdp
