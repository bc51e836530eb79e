#include "netform/simulate.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace netform {

void NetworkData::validate() const {
  pop.validate();
  if (adjacency.rows() != n() || adjacency.cols() != n()) throw std::invalid_argument("adjacency must be n x n");
  for (int i = 0; i < n(); ++i) {
    if (adjacency(i, i) != 0) throw std::invalid_argument("adjacency diagonal must be zero");
    for (int j = 0; j < n(); ++j)
      if (adjacency(i, j) > 1) throw std::invalid_argument("adjacency entries must be 0 or 1");
  }
}

Population draw_population(int n, const TypeSpace& ts, RandomStream stream) {
  if (n < 4) throw std::invalid_argument("draw_population: n must be >= 4");
  ts.validate();
  std::vector<double> w(ts.limit_probs.data(), ts.limit_probs.data() + ts.size());
  std::vector<int> type_of(n);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    double u = unif(stream);
    int t = 0;
    double acc = w[0];
    while (t + 1 < ts.size() && (u >= acc || w[t] == 0.0)) acc += w[++t];
    type_of[i] = t;
  }
  return Population::from_types(std::move(type_of), ts.size());
}

ShockVector agent_shocks(const Population& pop, int i, const ShockDistribution& dist, const RandomStream& stream) {
  RandomStream s = stream.child(static_cast<std::uint64_t>(i));
  ShockVector out;
  out.eps.resize(pop.n() - 1);
  for (double& e : out.eps) e = dist.sample(s);
  return out;
}

NetworkData generate_network(const CoefficientSet& coef, const LinkProbMatrix& p_star, const Population& pop,
                             const TypeSpace& ts, const ShockDistribution& dist, const RandomStream& stream) {
  p_star.validate();
  const int n = pop.n();
  NetworkData data;
  data.pop = pop;
  data.adjacency = Adjacency::Zero(n, n);
  std::vector<AgentProblem> by_type(pop.num_types());
  for (int s = 0; s < pop.num_types(); ++s)
    if (pop.counts[s] > 0) by_type[s] = AgentProblem::for_type(s, pop, p_star, coef, ts);
  for (int i = 0; i < n; ++i) {
    AgentProblem prob = by_type[pop.type_of[i]];
    prob.target_types.clear();
    for (int j = 0; j < n; ++j)
      if (j != i) prob.target_types.push_back(pop.type_of[j]);
    ShockVector eps = agent_shocks(pop, i, dist, stream);
    CountChoice choice = best_counts(prob, SortedShocks(prob, eps));
    SortedShocks sorted(prob, eps);
    for (int j = 0, slot = 0; j < n; ++j) {
      if (j == i) continue;
      const int t = pop.type_of[j];
      const int m_t = choice.counts[t];
      data.adjacency(i, j) = m_t > 0 && eps.eps[slot] <= sorted.sorted(t)[m_t - 1] ? 1 : 0;
      ++slot;
    }
  }
  return data;
}

int oracle_check(const NetworkData& data, const CoefficientSet& coef, const LinkProbMatrix& p_star,
                 const TypeSpace& ts, const ShockDistribution& dist, const RandomStream& stream) {
  int mismatches = 0;
  for (int i = 0; i < data.n(); ++i) {
    AgentProblem prob = AgentProblem::for_agent(i, data.pop, p_star, coef, ts);
    LinkVector oracle = brute_force_oracle(prob, agent_shocks(data.pop, i, dist, stream));
    for (int j = 0, slot = 0; j < data.n(); ++j) {
      if (j == i) continue;
      if (oracle[slot++] != data.adjacency(i, j)) {
        ++mismatches;
        break;
      }
    }
  }
  return mismatches;
}

void write_edge_list(std::ostream& out, const NetworkData& data) {
  out << data.n() << ' ' << data.pop.num_types() << '\n';
  for (int i = 0; i < data.n(); ++i) out << i << ' ' << data.pop.type_of[i] << '\n';
  for (int i = 0; i < data.n(); ++i)
    for (int j = 0; j < data.n(); ++j)
      if (data.adjacency(i, j)) out << i << ' ' << j << '\n';
}

NetworkData read_edge_list(std::istream& in) {
  int n = 0, T = 0;
  if (!(in >> n >> T) || n < 1 || T < 1) throw std::runtime_error("edge list: bad header, expected 'n T'");
  std::vector<int> type_of(n, -1);
  for (int k = 0; k < n; ++k) {
    int i = 0, t = 0;
    if (!(in >> i >> t)) throw std::runtime_error("edge list: truncated agent block");
    if (i < 0 || i >= n || t < 0 || t >= T || type_of[i] != -1)
      throw std::runtime_error("edge list: bad agent line " + std::to_string(k + 2));
    type_of[i] = t;
  }
  NetworkData data;
  data.pop = Population::from_types(std::move(type_of), T);
  data.adjacency = Adjacency::Zero(n, n);
  int i = 0, j = 0;
  while (in >> i >> j) {
    if (i < 0 || i >= n || j < 0 || j >= n || i == j)
      throw std::runtime_error("edge list: bad edge " + std::to_string(i) + " " + std::to_string(j));
    data.adjacency(i, j) = 1;
  }
  if (!in.eof()) throw std::runtime_error("edge list: unparseable trailing content");
  return data;
}

void save_edge_list(const std::string& path, const NetworkData& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_edge_list(out, data);
}

NetworkData load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return read_edge_list(in);
}

}  // namespace netform
