/*
 * Copyright 2026 The GFSA Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "gfsa/gfsa.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace gfsa {

void AutomatonParams::validate(const ParamLayout& layout) const {
  if (theta.size() != layout.size()) {
    throw Error("params: table has " + std::to_string(theta.size()) +
                " entries, layout expects " + std::to_string(layout.size()));
  }
  if (num_memory != layout.num_memory()) {
    throw Error("params: memory size does not match layout");
  }
  if (z0 < 0 || z0 >= num_memory) throw Error("params: z0 out of range");
  if (t_max < 1) throw Error("params: t_max must be at least 1");
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (!std::isfinite(theta[i])) {
      throw Error("params: non-finite logit at index " + std::to_string(i));
    }
  }
}

std::vector<double> base_distribution(const ParamLayout& layout) {
  std::vector<double> p(layout.size(), 0.0);
  int nz = layout.num_memory();
  for (int type = 0; type < layout.num_types(); ++type) {
    int moves = layout.num_moves(type);
    int halts = layout.num_halting();
    double move_mass = moves > 0 ? 0.95 : 0.0;
    for (int obs = 0; obs < layout.num_observations(type); ++obs) {
      for (int slot = 0; slot < layout.num_slots(type); ++slot) {
        for (int z = 0; z < nz; ++z) {
          for (int a = 0; a < moves + halts; ++a) {
            double pa = a < moves ? move_mass / moves
                                  : (1.0 - move_mass) / halts;
            for (int z1 = 0; z1 < nz; ++z1) {
              double pz = nz == 1 ? 1.0 : (z1 == z ? 0.8 : 0.2 / (nz - 1));
              p[layout.entry(type, obs, slot, z, a, z1)] = pa * pz;
            }
          }
        }
      }
    }
  }
  return p;
}

AutomatonParams init_params(SeededRng& rng, const ParamLayout& layout,
                            double beta, bool log_form) {
  if (!(beta > 0)) throw Error("init_params: beta must be positive");
  std::vector<double> p = base_distribution(layout);
  AutomatonParams params;
  params.num_memory = layout.num_memory();
  params.theta.resize(layout.size());
  std::vector<double> alpha;
  for (const IndexGroup& g : layout.groups()) {
    alpha.assign(p.begin() + g.begin, p.begin() + g.begin + g.size);
    for (double& a : alpha) a /= beta;
    std::vector<double> q = rng.dirichlet(alpha);
    for (std::size_t i = 0; i < g.size; ++i) {
      params.theta[g.begin + i] = log_form ? std::log(q[i] + 0.001) : q[i];
    }
  }
  return params;
}

namespace {

// Applies f(backtrack_index, stop_index) over every (group, next state).
template <typename F>
void for_each_backtrack(const ParamLayout& layout, F&& f) {
  if (!layout.allow_backtrack()) return;
  int nz = layout.num_memory();
  for (int type = 0; type < layout.num_types(); ++type) {
    int bt = layout.halt_action(type, Halt::kBacktrack);
    int stop = layout.halt_action(type, Halt::kStop);
    for (int obs = 0; obs < layout.num_observations(type); ++obs) {
      for (int slot = 0; slot < layout.num_slots(type); ++slot) {
        for (int z = 0; z < nz; ++z) {
          for (int z1 = 0; z1 < nz; ++z1) {
            f(layout.entry(type, obs, slot, z, bt, z1),
              layout.entry(type, obs, slot, z, stop, z1));
          }
        }
      }
    }
  }
}

}  // namespace

Policy normalize_policy(const ParamLayout& layout,
                        const AutomatonParams& params) {
  if (params.theta.size() != layout.size()) {
    throw Error("normalize_policy: parameter table does not match layout");
  }
  Policy policy;
  policy.pi = softmax_over_groups(params.theta, layout.groups());
  double eps = params.eps_bt_stop;
  for_each_backtrack(layout, [&](std::size_t bt, std::size_t stop) {
    double b = policy.pi[bt];
    policy.pi[bt] = (1.0 - eps) * b;
    policy.pi[stop] += eps * b;
  });
  return policy;
}

std::vector<double> normalize_policy_vjp(const ParamLayout& layout,
                                         const AutomatonParams& params,
                                         std::span<const double> dpi) {
  std::vector<double> soft = softmax_over_groups(params.theta, layout.groups());
  std::vector<double> dsoft(dpi.begin(), dpi.end());
  double eps = params.eps_bt_stop;
  for_each_backtrack(layout, [&](std::size_t bt, std::size_t stop) {
    dsoft[bt] = (1.0 - eps) * dpi[bt] + eps * dpi[stop];
  });
  return softmax_over_groups_vjp(soft, dsoft, layout.groups());
}

namespace {

// Nonzero entries of the transition tensor for one policy, flattened so the
// Richardson sweep is a list of scaled row updates.
struct Transitions {
  struct Entry {
    int src;
    int dst;
    std::size_t pi;
    double p;  // environment probability
    double w;  // p * pi
    int cs;    // -1, or offset of the per-start observation weights
  };
  std::vector<Entry> entries;
  struct HaltEntry {
    int row;
    int node;
    int action;
    std::size_t pi;
    double w;
    int cs;
  };
  std::vector<HaltEntry> halts;
  // Per-start dynamic observation weights, [slot][gamma][s].
  std::vector<double> cs;
};

Transitions build_transitions(const PomdpInstance& inst,
                              const ParamLayout& layout, const Policy& policy,
                              const std::vector<int>& starts,
                              bool keep_zero) {
  if (policy.pi.size() != layout.size()) {
    throw Error("solve_absorbing: policy does not match parameter layout");
  }
  if (inst.schema_hash != 0 && layout.schema_hash() != 0 &&
      inst.schema_hash != layout.schema_hash()) {
    throw Error("solve_absorbing: instance and layout use different schemas");
  }
  Transitions t;
  int nz = layout.num_memory();
  std::size_t ns = starts.size();
  int gamma = inst.num_gamma;
  t.cs.resize(static_cast<std::size_t>(inst.num_dynamic_states) * gamma * ns);
  for (int slot = 0; slot < inst.num_dynamic_states; ++slot) {
    for (int g = 0; g < gamma; ++g) {
      for (std::size_t s = 0; s < ns; ++s) {
        t.cs[(static_cast<std::size_t>(slot) * gamma + g) * ns + s] =
            inst.c(slot, starts[s], g);
      }
    }
  }
  for (int x = 0; x < inst.num_states(); ++x) {
    int type = inst.state_type[x];
    if (type >= layout.num_types()) {
      throw Error("solve_absorbing: state type outside parameter layout");
    }
    int moves = layout.num_moves(type);
    int dyn = inst.dynamic_slot[x];
    int n_slots = dyn >= 0 ? gamma : 1;
    if (n_slots != layout.num_slots(type)) {
      throw Error("solve_absorbing: observation slots do not match layout");
    }
    for (int slot = 0; slot < n_slots; ++slot) {
      int cs = dyn >= 0 ? static_cast<int>((static_cast<std::size_t>(dyn) *
                                                gamma +
                                            slot) *
                                           ns)
                        : -1;
      for (int z = 0; z < nz; ++z) {
        int src = x * nz + z;
        std::size_t base = layout.group_offset(type, inst.state_obs[x], slot, z);
        for (int m = 0; m < moves; ++m) {
          int r = inst.move_row[x] + m;
          for (int k = inst.move_begin[r]; k < inst.move_begin[r + 1]; ++k) {
            for (int z1 = 0; z1 < nz; ++z1) {
              std::size_t j = base + static_cast<std::size_t>(m) * nz + z1;
              double w = inst.succ_prob[k] * policy.pi[j];
              if (w == 0.0 && !keep_zero) continue;
              t.entries.push_back({src, inst.succ_state[k] * nz + z1, j,
                                   inst.succ_prob[k], w, cs});
            }
          }
        }
        for (int h = 0; h < layout.num_halting(); ++h) {
          for (int z1 = 0; z1 < nz; ++z1) {
            std::size_t j = base + static_cast<std::size_t>(moves + h) * nz + z1;
            double w = policy.pi[j];
            if (w == 0.0 && !keep_zero) continue;
            t.halts.push_back({src, inst.state_node[x], h, j, w, cs});
          }
        }
      }
    }
  }
  return t;
}

// out[dst] += Q v restricted to the listed entries.
void apply_q(const Transitions& t, std::size_t ns, const double* v,
             double* out) {
  for (const Transitions::Entry& e : t.entries) {
    const double* src = v + static_cast<std::size_t>(e.src) * ns;
    double* dst = out + static_cast<std::size_t>(e.dst) * ns;
    double w = e.w;
    if (e.cs < 0) {
      for (std::size_t s = 0; s < ns; ++s) dst[s] += w * src[s];
    } else {
      const double* c = t.cs.data() + e.cs;
      for (std::size_t s = 0; s < ns; ++s) dst[s] += w * c[s] * src[s];
    }
  }
}

// out[src] += Q^T v.
void apply_qt(const Transitions& t, std::size_t ns, const double* v,
              double* out) {
  for (const Transitions::Entry& e : t.entries) {
    const double* dst = v + static_cast<std::size_t>(e.dst) * ns;
    double* src = out + static_cast<std::size_t>(e.src) * ns;
    double w = e.w;
    if (e.cs < 0) {
      for (std::size_t s = 0; s < ns; ++s) src[s] += w * dst[s];
    } else {
      const double* c = t.cs.data() + e.cs;
      for (std::size_t s = 0; s < ns; ++s) src[s] += w * c[s] * dst[s];
    }
  }
}

void check_starts(const PomdpInstance& inst, const std::vector<int>& starts) {
  for (int n0 : starts) {
    if (n0 < 0 || n0 >= inst.num_nodes) {
      throw Error("solve_absorbing: start node " + std::to_string(n0) +
                  " out of range");
    }
  }
}

}  // namespace

AbsorbingDistribution solve_absorbing(const PomdpInstance& instance,
                                      const ParamLayout& layout,
                                      const Policy& policy, int z0, int t_max,
                                      const std::vector<int>& starts) {
  if (t_max < 1) throw Error("solve_absorbing: t_max must be at least 1");
  if (z0 < 0 || z0 >= layout.num_memory()) {
    throw Error("solve_absorbing: z0 out of range");
  }
  check_starts(instance, starts);
  Transitions t = build_transitions(instance, layout, policy, starts, false);
  int nz = layout.num_memory();
  std::size_t ns = starts.size();
  AbsorbingDistribution out;
  out.num_nodes = instance.num_nodes;
  out.num_rows = instance.num_states() * nz;
  out.t_max = t_max;
  out.z0 = z0;
  out.starts = starts;

  std::size_t len = static_cast<std::size_t>(out.num_rows) * ns;
  std::vector<std::size_t> delta(ns);
  for (std::size_t s = 0; s < ns; ++s) {
    delta[s] = static_cast<std::size_t>(instance.initial_state[starts[s]] * nz +
                                        z0) *
                   ns +
               s;
  }
  std::vector<double> cur(len, 0.0);
  std::vector<double> next(len, 0.0);
  for (std::size_t d : delta) cur[d] = 1.0;
  for (int k = 0; k < t_max; ++k) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t d : delta) next[d] = 1.0;
    apply_q(t, ns, cur.data(), next.data());
    cur.swap(next);
  }

  out.probs.assign(ns * kNumHalt * instance.num_nodes, 0.0);
  for (const Transitions::HaltEntry& h : t.halts) {
    const double* xr = cur.data() + static_cast<std::size_t>(h.row) * ns;
    for (std::size_t s = 0; s < ns; ++s) {
      double c = h.cs < 0 ? 1.0 : t.cs[h.cs + s];
      out.probs[(s * kNumHalt + h.action) * instance.num_nodes + h.node] +=
          h.w * c * xr[s];
    }
  }
  out.x = std::move(cur);
  return out;
}

AbsorbingDistribution solve_absorbing(const PomdpInstance& instance,
                                      const ParamLayout& layout,
                                      const Policy& policy, int z0,
                                      int t_max) {
  std::vector<int> starts(instance.num_nodes);
  for (int n = 0; n < instance.num_nodes; ++n) starts[n] = n;
  return solve_absorbing(instance, layout, policy, z0, t_max, starts);
}

std::vector<double> backward_absorbing_policy(
    const PomdpInstance& instance, const ParamLayout& layout,
    const Policy& policy, const AbsorbingDistribution& forward,
    std::span<const double> dprobs) {
  std::size_t ns = forward.starts.size();
  if (forward.x.size() != static_cast<std::size_t>(forward.num_rows) * ns ||
      forward.num_rows != instance.num_states() * layout.num_memory()) {
    throw Error("backward_absorbing: forward solution state is missing");
  }
  if (dprobs.size() != forward.probs.size()) {
    throw Error("backward_absorbing: cotangent has the wrong shape");
  }
  Transitions t = build_transitions(instance, layout, policy, forward.starts,
                                    true);
  int n = instance.num_nodes;
  std::size_t len = static_cast<std::size_t>(forward.num_rows) * ns;

  // b = H^T g
  std::vector<double> b(len, 0.0);
  for (const Transitions::HaltEntry& h : t.halts) {
    double* br = b.data() + static_cast<std::size_t>(h.row) * ns;
    for (std::size_t s = 0; s < ns; ++s) {
      double c = h.cs < 0 ? 1.0 : t.cs[h.cs + s];
      br[s] += h.w * c * dprobs[(s * kNumHalt + h.action) * n + h.node];
    }
  }
  std::vector<double> y = b;
  std::vector<double> next(len);
  for (int k = 0; k < forward.t_max; ++k) {
    std::copy(b.begin(), b.end(), next.begin());
    apply_qt(t, ns, y.data(), next.data());
    y.swap(next);
  }

  std::vector<double> dpi(layout.size(), 0.0);
  const double* x = forward.x.data();
  for (const Transitions::Entry& e : t.entries) {
    const double* xs = x + static_cast<std::size_t>(e.src) * ns;
    const double* yd = y.data() + static_cast<std::size_t>(e.dst) * ns;
    double acc = 0;
    if (e.cs < 0) {
      for (std::size_t s = 0; s < ns; ++s) acc += yd[s] * xs[s];
    } else {
      const double* c = t.cs.data() + e.cs;
      for (std::size_t s = 0; s < ns; ++s) acc += c[s] * yd[s] * xs[s];
    }
    dpi[e.pi] += e.p * acc;
  }
  for (const Transitions::HaltEntry& h : t.halts) {
    const double* xr = x + static_cast<std::size_t>(h.row) * ns;
    double acc = 0;
    for (std::size_t s = 0; s < ns; ++s) {
      double c = h.cs < 0 ? 1.0 : t.cs[h.cs + s];
      acc += c * xr[s] * dprobs[(s * kNumHalt + h.action) * n + h.node];
    }
    dpi[h.pi] += acc;
  }
  return dpi;
}

std::vector<double> backward_absorbing(const PomdpInstance& instance,
                                       const ParamLayout& layout,
                                       const AutomatonParams& params,
                                       const Policy& policy,
                                       const AbsorbingDistribution& forward,
                                       std::span<const double> dprobs) {
  std::vector<double> dpi =
      backward_absorbing_policy(instance, layout, policy, forward, dprobs);
  return normalize_policy_vjp(layout, params, dpi);
}

namespace {

double clamp_prob(double p) {
  return std::clamp(p, kLogitClamp, 1.0 - kLogitClamp);
}

}  // namespace

DerivedAdjacency derived_adjacency(const AbsorbingDistribution& dist,
                                   const AutomatonParams& params) {
  int n = dist.num_nodes;
  DerivedAdjacency out{DenseMatrix(n, n), DenseMatrix(n, n)};
  for (std::size_t s = 0; s < dist.starts.size(); ++s) {
    int n0 = dist.starts[s];
    double denom = 0;
    for (int v = 0; v < n; ++v) {
      denom += dist.prob(s, Halt::kAddEdge, v) + dist.prob(s, Halt::kStop, v);
    }
    for (int v = 0; v < n; ++v) {
      double a_hat =
          denom < kMinHaltingMass ? 0.0 : dist.prob(s, Halt::kAddEdge, v) / denom;
      out.a_hat(n0, v) = a_hat;
      if (params.adjust) {
        double u = clamp_prob(a_hat);
        out.a(n0, v) = sigmoid(params.adjust_a * std::log(u / (1.0 - u)) +
                               params.adjust_b);
      } else {
        out.a(n0, v) = a_hat;
      }
    }
  }
  return out;
}

AdjacencyGrad derived_adjacency_vjp(const AbsorbingDistribution& dist,
                                    const AutomatonParams& params,
                                    const DenseMatrix& da) {
  int n = dist.num_nodes;
  AdjacencyGrad out;
  out.dprobs.assign(dist.probs.size(), 0.0);
  std::vector<double> dhat(n);
  std::vector<double> hat(n);
  for (std::size_t s = 0; s < dist.starts.size(); ++s) {
    int n0 = dist.starts[s];
    double denom = 0;
    for (int v = 0; v < n; ++v) {
      denom += dist.prob(s, Halt::kAddEdge, v) + dist.prob(s, Halt::kStop, v);
    }
    if (denom < kMinHaltingMass) {
      if (params.adjust) {
        // A is constant in the probabilities here; only a and b move it.
        for (int v = 0; v < n; ++v) {
          double u = clamp_prob(0.0);
          double l = std::log(u / (1.0 - u));
          double sg = sigmoid(params.adjust_a * l + params.adjust_b);
          double ds = da(n0, v) * sg * (1.0 - sg);
          out.da += ds * l;
          out.db += ds;
        }
      }
      continue;
    }
    double dot = 0;
    for (int v = 0; v < n; ++v) {
      hat[v] = dist.prob(s, Halt::kAddEdge, v) / denom;
      double g = da(n0, v);
      if (params.adjust) {
        double u = hat[v];
        bool clamped = u < kLogitClamp || u > 1.0 - kLogitClamp;
        u = clamp_prob(u);
        double l = std::log(u / (1.0 - u));
        double sg = sigmoid(params.adjust_a * l + params.adjust_b);
        double ds = g * sg * (1.0 - sg);
        out.da += ds * l;
        out.db += ds;
        g = clamped ? 0.0 : ds * params.adjust_a / (u * (1.0 - u));
      }
      dhat[v] = g;
      dot += g * hat[v];
    }
    for (int v = 0; v < n; ++v) {
      out.dprobs[dist.prob_index(s, Halt::kAddEdge, v)] =
          dhat[v] / denom - dot / denom;
      out.dprobs[dist.prob_index(s, Halt::kStop, v)] = -dot / denom;
    }
  }
  return out;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

namespace {

std::uint64_t parse_hex64(const std::string& s) {
  if (s.size() != 16) throw Error("checkpoint: malformed schema hash");
  return std::stoull(s, nullptr, 16);
}

void write_f64_le(std::ostream& os, const std::vector<double>& values) {
  for (double v : values) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
    os.write(reinterpret_cast<const char*>(bytes), 8);
  }
}

std::vector<double> read_f64_le(std::istream& is, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    unsigned char bytes[8];
    if (!is.read(reinterpret_cast<char*>(bytes), 8)) {
      throw Error("checkpoint: truncated parameter data");
    }
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    out[k] = std::bit_cast<double>(bits);
  }
  return out;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  nlohmann::json tables = nlohmann::json::array();
  for (const AutomatonParams& p : ckpt.tables) {
    nlohmann::json t = {{"num_params", p.theta.size()},
                        {"num_memory", p.num_memory},
                        {"z0", p.z0},
                        {"eps_bt_stop", p.eps_bt_stop},
                        {"t_max", p.t_max}};
    if (p.adjust) {
      t["adjust"] = {{"a", p.adjust_a}, {"b", p.adjust_b}};
    } else {
      t["adjust"] = "disabled";
    }
    tables.push_back(std::move(t));
  }
  nlohmann::json header = {{"format", "gfsa-checkpoint"},
                           {"version", 1},
                           {"schema_hash", hex64(ckpt.schema_hash)},
                           {"tables", tables},
                           {"meta", ckpt.meta}};
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("checkpoint: cannot open '" + path + "' for writing");
  os << header.dump() << '\n';
  for (const AutomatonParams& p : ckpt.tables) write_f64_le(os, p.theta);
  if (!os) throw Error("checkpoint: write to '" + path + "' failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("checkpoint: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(is, line)) throw Error("checkpoint: missing header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("checkpoint: bad header: ") + e.what());
  }
  if (header.value("format", "") != "gfsa-checkpoint") {
    throw Error("checkpoint: '" + path + "' is not a checkpoint file");
  }
  Checkpoint ckpt;
  ckpt.schema_hash = parse_hex64(header.at("schema_hash").get<std::string>());
  ckpt.meta = header.value("meta", nlohmann::json::object());
  for (const auto& t : header.at("tables")) {
    AutomatonParams p;
    p.num_memory = t.at("num_memory").get<int>();
    p.z0 = t.at("z0").get<int>();
    p.eps_bt_stop = t.at("eps_bt_stop").get<double>();
    p.t_max = t.at("t_max").get<int>();
    if (t.at("adjust").is_object()) {
      p.adjust = true;
      p.adjust_a = t.at("adjust").at("a").get<double>();
      p.adjust_b = t.at("adjust").at("b").get<double>();
    }
    p.theta.resize(t.at("num_params").get<std::size_t>());
    ckpt.tables.push_back(std::move(p));
  }
  for (AutomatonParams& p : ckpt.tables) {
    p.theta = read_f64_le(is, p.theta.size());
  }
  return ckpt;
}

}  // namespace gfsa
