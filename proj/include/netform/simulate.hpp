#pragma once

#include "netform/bestresponse.hpp"
#include "netform/model.hpp"
#include "netform/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>

namespace netform {

using Adjacency = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

struct NetworkData {
  Adjacency adjacency;  // directed, zero diagonal
  Population pop;
  std::uint64_t seed = 0;  // replication seed the network was drawn from; 0 if unknown

  int n() const { return pop.n(); }
  void validate() const;
};

Population draw_population(int n, const TypeSpace& ts, RandomStream stream);

// Each agent's row is its best response to its own shocks, drawn from
// stream.child(i), so any row can be regenerated alone.
NetworkData generate_network(const CoefficientSet& coef, const LinkProbMatrix& p_star, const Population& pop,
                             const TypeSpace& ts, const ShockDistribution& dist, const RandomStream& stream);

ShockVector agent_shocks(const Population& pop, int i, const ShockDistribution& dist, const RandomStream& stream);

// Returns the number of rows that disagree with the brute-force oracle.
int oracle_check(const NetworkData& data, const CoefficientSet& coef, const LinkProbMatrix& p_star,
                 const TypeSpace& ts, const ShockDistribution& dist, const RandomStream& stream);

// Edge-list text: "n T", then one "i type" line per agent, then one "i j"
// line per directed edge, all indices zero based.
void write_edge_list(std::ostream& out, const NetworkData& data);
NetworkData read_edge_list(std::istream& in);
void save_edge_list(const std::string& path, const NetworkData& data);
NetworkData load_edge_list(const std::string& path);

}  // namespace netform
