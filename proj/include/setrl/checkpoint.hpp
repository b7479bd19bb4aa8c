// Parameter checkpoints: little-endian binary with a versioned header
// (magic, version, L, m, d, flags) followed by raw 64-bit floats in struct
// declaration order, plus a sidecar text manifest listing shapes and budget.
#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "setrl/budget.hpp"
#include "setrl/networks.hpp"

namespace setrl {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

inline constexpr std::uint32_t kCheckpointMagic = 0x4C525453;  // "STRL"
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class CheckpointKind : std::uint32_t {
  kSetTransformerValue = 1,
  kSetTransformerDynamics = 2,
  kDeepSets = 3,
  kPolicy = 4,
  kMlp = 5,
};

namespace detail {

struct CheckpointHeader {
  std::uint32_t magic = kCheckpointMagic;
  std::uint32_t version = kCheckpointVersion;
  std::int32_t L = 0;
  std::int32_t m = 0;
  std::int32_t d = 0;
  std::uint32_t flags = 0;  // bits 0..7: kind; bits 8..31: kind-specific extra dim
};

inline void write_doubles(std::ostream& os, const double* p, std::size_t n) {
  os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

inline void read_doubles(std::istream& is, double* p, std::size_t n) {
  is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw std::runtime_error("checkpoint: truncated payload");
}

inline void write_matrix(std::ostream& os, const Matrix& m) {
  write_doubles(os, m.a.data(), m.a.size());
}

inline void read_matrix(std::istream& is, Matrix& m, int rows, int cols) {
  m.resize(rows, cols);
  read_doubles(is, m.a.data(), m.a.size());
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
  return os;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open for reading: " + path);
  return is;
}

inline CheckpointHeader read_header(std::istream& is, CheckpointKind want) {
  CheckpointHeader h;
  is.read(reinterpret_cast<char*>(&h), sizeof(h));
  if (!is) throw std::runtime_error("checkpoint: truncated header");
  if (h.magic != kCheckpointMagic) throw std::runtime_error("checkpoint: bad magic");
  if (h.version != kCheckpointVersion) throw std::runtime_error("checkpoint: unknown version");
  if ((h.flags & 0xFF) != static_cast<std::uint32_t>(want))
    throw std::runtime_error("checkpoint: wrong network kind for this loader");
  return h;
}

inline void write_manifest(const std::string& path, const std::string& body) {
  std::ofstream os(path + ".manifest");
  if (!os) throw std::runtime_error("checkpoint: cannot write manifest for " + path);
  os << body;
}

inline std::string budget_lines(const NormBudget* budget) {
  if (budget == nullptr) return "budget: none\n";
  std::ostringstream ss;
  ss << "budget: B_a=" << budget->B_a << " B_b=" << budget->B_b << " B_QK=" << budget->B_QK
     << " B_V=" << budget->B_V << " B_w=" << budget->B_w << " p=" << budget->p
     << " q=" << budget->q << "\n";
  return ss.str();
}

}  // namespace detail

// ---- set transformer -------------------------------------------------------------

inline void save_checkpoint(const std::string& path, const SetTransformerParams& th,
                            bool value_head, const NormBudget* budget = nullptr) {
  validate(th, value_head);
  detail::CheckpointHeader h;
  h.L = th.L;
  h.m = th.m;
  h.d = th.d;
  h.flags = static_cast<std::uint32_t>(value_head ? CheckpointKind::kSetTransformerValue
                                                  : CheckpointKind::kSetTransformerDynamics);
  auto os = detail::open_out(path);
  os.write(reinterpret_cast<const char*>(&h), sizeof(h));
  for (const Matrix& m : th.w_qk) detail::write_matrix(os, m);
  for (const Matrix& m : th.w_v) detail::write_matrix(os, m);
  for (const Matrix& m : th.a) detail::write_matrix(os, m);
  for (const Matrix& m : th.b) detail::write_matrix(os, m);
  if (value_head) detail::write_matrix(os, th.w);
  detail::write_doubles(os, &th.v_max, 1);
  detail::write_doubles(os, &th.p, 1);
  if (!os) throw std::runtime_error("checkpoint: write failed: " + path);

  std::ostringstream man;
  man << "kind: " << (value_head ? "set_transformer_value" : "set_transformer_dynamics")
      << "\nL: " << th.L << "\nm: " << th.m << "\nd: " << th.d << "\n"
      << "shapes: w_qk " << th.L << "x(" << th.d << "x" << th.d << "), w_v " << th.L << "x("
      << th.d << "x" << th.d << "), a " << th.L << "x(1x" << th.d * th.m << "), b " << th.L
      << "x(" << th.d << "x" << th.d * th.m << ")"
      << (value_head ? ", w (" + std::to_string(th.d) + "x1)" : "") << "\n"
      << "v_max: " << th.v_max << "\np: " << th.p << "\n"
      << detail::budget_lines(budget);
  detail::write_manifest(path, man.str());
}

inline SetTransformerParams load_set_transformer(const std::string& path, bool value_head) {
  auto is = detail::open_in(path);
  const auto h = detail::read_header(is, value_head ? CheckpointKind::kSetTransformerValue
                                                    : CheckpointKind::kSetTransformerDynamics);
  SetTransformerParams th;
  th.L = h.L;
  th.m = h.m;
  th.d = h.d;
  th.w_qk.resize(th.L);
  th.w_v.resize(th.L);
  th.a.resize(th.L);
  th.b.resize(th.L);
  for (Matrix& m : th.w_qk) detail::read_matrix(is, m, th.d, th.d);
  for (Matrix& m : th.w_v) detail::read_matrix(is, m, th.d, th.d);
  for (Matrix& m : th.a) detail::read_matrix(is, m, 1, th.d * th.m);
  for (Matrix& m : th.b) detail::read_matrix(is, m, th.d, th.d * th.m);
  if (value_head) detail::read_matrix(is, th.w, th.d, 1);
  detail::read_doubles(is, &th.v_max, 1);
  detail::read_doubles(is, &th.p, 1);
  validate(th, value_head);
  return th;
}

// ---- deep sets --------------------------------------------------------------------

inline void save_checkpoint(const std::string& path, const DeepSetsParams& th,
                            const NormBudget* budget = nullptr) {
  validate(th);
  detail::CheckpointHeader h;
  h.L = th.W1;
  h.m = th.W2;
  h.d = th.d;
  h.flags = static_cast<std::uint32_t>(CheckpointKind::kDeepSets) |
            (static_cast<std::uint32_t>(th.W3) << 8);
  auto os = detail::open_out(path);
  os.write(reinterpret_cast<const char*>(&h), sizeof(h));
  detail::write_matrix(os, th.phi_a);
  detail::write_matrix(os, th.phi_b);
  detail::write_matrix(os, th.phi_c);
  detail::write_matrix(os, th.phi_d);
  detail::write_matrix(os, th.rho_e);
  detail::write_matrix(os, th.rho_f);
  detail::write_matrix(os, th.rho_g);
  detail::write_doubles(os, &th.rho_h, 1);
  detail::write_doubles(os, &th.v_max, 1);
  if (!os) throw std::runtime_error("checkpoint: write failed: " + path);

  std::ostringstream man;
  man << "kind: deep_sets\nd: " << th.d << "\nW1: " << th.W1 << "\nW2: " << th.W2
      << "\nW3: " << th.W3 << "\n"
      << "shapes: phi_a (" << th.d << "x" << th.W1 << "), phi_b (1x" << th.W1 << "), phi_c ("
      << th.W1 << "x" << th.W2 << "), phi_d (1x" << th.W2 << "), rho_e (" << th.W2 << "x"
      << th.W3 << "), rho_f (1x" << th.W3 << "), rho_g (" << th.W3 << "x1), rho_h (scalar)\n"
      << "v_max: " << th.v_max << "\n" << detail::budget_lines(budget);
  detail::write_manifest(path, man.str());
}

inline DeepSetsParams load_deepsets(const std::string& path) {
  auto is = detail::open_in(path);
  const auto h = detail::read_header(is, CheckpointKind::kDeepSets);
  DeepSetsParams th;
  th.W1 = h.L;
  th.W2 = h.m;
  th.d = h.d;
  th.W3 = static_cast<int>(h.flags >> 8);
  detail::read_matrix(is, th.phi_a, th.d, th.W1);
  detail::read_matrix(is, th.phi_b, 1, th.W1);
  detail::read_matrix(is, th.phi_c, th.W1, th.W2);
  detail::read_matrix(is, th.phi_d, 1, th.W2);
  detail::read_matrix(is, th.rho_e, th.W2, th.W3);
  detail::read_matrix(is, th.rho_f, 1, th.W3);
  detail::read_matrix(is, th.rho_g, th.W3, 1);
  detail::read_doubles(is, &th.rho_h, 1);
  detail::read_doubles(is, &th.v_max, 1);
  validate(th);
  return th;
}

// ---- policy -----------------------------------------------------------------------

inline void save_checkpoint(const std::string& path, const PolicyParams& th) {
  validate(th);
  detail::CheckpointHeader h;
  h.L = 1;
  h.m = th.hidden;
  h.d = th.d_s;
  h.flags = static_cast<std::uint32_t>(CheckpointKind::kPolicy) |
            (static_cast<std::uint32_t>(kActionCount) << 8);
  auto os = detail::open_out(path);
  os.write(reinterpret_cast<const char*>(&h), sizeof(h));
  detail::write_matrix(os, th.w1);
  detail::write_matrix(os, th.b1);
  detail::write_matrix(os, th.w2);
  detail::write_matrix(os, th.b2);
  if (!os) throw std::runtime_error("checkpoint: write failed: " + path);

  std::ostringstream man;
  man << "kind: policy\nd_s: " << th.d_s << "\nhidden: " << th.hidden
      << "\nactions: " << kActionCount << "\n"
      << "shapes: w1 (" << th.d_s << "x" << th.hidden << "), b1 (1x" << th.hidden << "), w2 ("
      << th.hidden << "x" << kActionCount << "), b2 (1x" << kActionCount << ")\n"
      << "budget: none\n";
  detail::write_manifest(path, man.str());
}

inline PolicyParams load_policy(const std::string& path) {
  auto is = detail::open_in(path);
  const auto h = detail::read_header(is, CheckpointKind::kPolicy);
  if (static_cast<int>(h.flags >> 8) != kActionCount)
    throw std::runtime_error("checkpoint: action count mismatch");
  PolicyParams th;
  th.d_s = h.d;
  th.hidden = h.m;
  detail::read_matrix(is, th.w1, th.d_s, th.hidden);
  detail::read_matrix(is, th.b1, 1, th.hidden);
  detail::read_matrix(is, th.w2, th.hidden, kActionCount);
  detail::read_matrix(is, th.b2, 1, kActionCount);
  validate(th);
  return th;
}

// ---- mlp --------------------------------------------------------------------------

inline void save_checkpoint(const std::string& path, const MlpParams& th) {
  validate(th);
  detail::CheckpointHeader h;
  h.L = 1;
  h.m = th.hidden;
  h.d = th.input_dim;
  h.flags = static_cast<std::uint32_t>(CheckpointKind::kMlp);
  auto os = detail::open_out(path);
  os.write(reinterpret_cast<const char*>(&h), sizeof(h));
  detail::write_matrix(os, th.w1);
  detail::write_matrix(os, th.b1);
  detail::write_matrix(os, th.w2);
  detail::write_doubles(os, &th.b2, 1);
  detail::write_doubles(os, &th.v_max, 1);
  if (!os) throw std::runtime_error("checkpoint: write failed: " + path);

  std::ostringstream man;
  man << "kind: mlp\ninput_dim: " << th.input_dim << "\nhidden: " << th.hidden << "\n"
      << "shapes: w1 (" << th.input_dim << "x" << th.hidden << "), b1 (1x" << th.hidden
      << "), w2 (" << th.hidden << "x1), b2 (scalar)\n"
      << "v_max: " << th.v_max << "\nbudget: none\n";
  detail::write_manifest(path, man.str());
}

inline MlpParams load_mlp(const std::string& path) {
  auto is = detail::open_in(path);
  const auto h = detail::read_header(is, CheckpointKind::kMlp);
  MlpParams th;
  th.input_dim = h.d;
  th.hidden = h.m;
  detail::read_matrix(is, th.w1, th.input_dim, th.hidden);
  detail::read_matrix(is, th.b1, 1, th.hidden);
  detail::read_matrix(is, th.w2, th.hidden, 1);
  detail::read_doubles(is, &th.b2, 1);
  detail::read_doubles(is, &th.v_max, 1);
  validate(th);
  return th;
}

}  // namespace setrl
