#include "rhm/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>

#include "rhm/errors.hpp"
#include "rhm/rng.hpp"

namespace rhm {

namespace {

constexpr double kDeadColumnNorm = 1e-12;
constexpr char kDictMagic[8] = {'R', 'H', 'M', 'D', 'I', 'C', 'T', '1'};

double spectral_norm_sq(const Eigen::MatrixXd& lo,
                        const Eigen::VectorXd& inv_norms) {
  // Power iteration on (D~^T D~) with D~ the column-normalized dictionary.
  const Eigen::Index n = lo.cols();
  if (n == 0) return 0.0;
  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(double(n)));
  double lambda = 0.0;
  for (int it = 0; it < 100; ++it) {
    Eigen::VectorXd u = lo * v.cwiseProduct(inv_norms);
    Eigen::VectorXd w = (lo.transpose() * u).cwiseProduct(inv_norms);
    const double norm = w.norm();
    if (norm < 1e-300) return 0.0;
    w /= norm;
    const double prev = lambda;
    lambda = norm;
    v = w;
    if (it > 4 && std::abs(lambda - prev) <= 1e-12 * lambda) break;
  }
  return lambda;
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

std::uint64_t fnv1a64(const void* bytes, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename T>
void write_pod(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

void DictionaryPair::finalize() {
  op.validate();
  n = int(hi.cols());
  lo.resize(op.lo_dim(), n);
  for (int j = 0; j < n; ++j) lo.col(j) = op.apply(hi.col(j));
  column_norms = lo.colwise().norm();
  inv_norms.resize(n);
  for (int j = 0; j < n; ++j) {
    inv_norms[j] =
        column_norms[j] > kDeadColumnNorm ? 1.0 / column_norms[j] : 0.0;
  }
  lo_spectral_norm = std::sqrt(spectral_norm_sq(lo, inv_norms));
}

void SolverConfig::validate() const {
  if (!(epsilon > 0) || !(lasso_weight > 0) || max_iterations < 1 ||
      !(convergence_tol > 0)) {
    throw ParameterError("SolverConfig: all fields must be positive");
  }
}

int SparseCode::nonzeros(double tol) const {
  int count = 0;
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    if (std::abs(alpha[i]) > tol) ++count;
  }
  return count;
}

DictionaryPair build_dictionary(const std::vector<const ImagePlane*>& images,
                                int patch_side, int n,
                                const DegradeOperator& op, std::uint64_t seed,
                                bool mean_center) {
  if (n < 1) throw ParameterError("build_dictionary: n must be >= 1");
  op.validate();

  // Valid centers keep the full window inside the image; an image smaller
  // than the patch contributes none.
  const int r = patch_side / 2;
  struct Span {
    const ImagePlane* img;
    std::uint64_t begin;
    int rows, cols;
  };
  std::vector<Span> spans;
  std::uint64_t total = 0;
  for (const ImagePlane* img : images) {
    const int rows = img->height - 2 * r;
    const int cols = img->width - 2 * r;
    if (rows <= 0 || cols <= 0) continue;
    spans.push_back({img, total, rows, cols});
    total += std::uint64_t(rows) * cols;
  }
  if (total == 0) {
    throw DataError("build_dictionary: no valid patch positions for side " +
                    std::to_string(patch_side));
  }

  DictionaryPair dict;
  dict.op = op;
  dict.op.patch_side = patch_side;
  dict.seed = seed;
  dict.mean_centered = mean_center;
  const int ch = images.empty() ? op.channels : spans.front().img->channels;
  dict.op.channels = ch;
  dict.hi.resize(std::size_t(patch_side) * patch_side * ch, n);

  Rng rng(seed);
  for (int j = 0; j < n; ++j) {
    const std::uint64_t pick = rng.next_below(total);
    std::size_t s = 0;
    while (s + 1 < spans.size() && spans[s + 1].begin <= pick) ++s;
    const std::uint64_t local = pick - spans[s].begin;
    const int row = r + int(local / spans[s].cols);
    const int col = r + int(local % spans[s].cols);
    Eigen::VectorXd p = extract_patch(*spans[s].img, row, col, patch_side);
    if (mean_center) p.array() -= p.mean();
    dict.hi.col(j) = p;
  }
  dict.finalize();
  return dict;
}

SparseCode solve_l1(const DictionaryPair& dict, const Eigen::VectorXd& x_l,
                    const SolverConfig& cfg, SolveTrace* trace) {
  cfg.validate();
  if (x_l.size() != dict.lo.rows()) {
    throw ParameterError("solve_l1: observation length " +
                         std::to_string(x_l.size()) + " != dictionary rows " +
                         std::to_string(dict.lo.rows()));
  }

  SparseCode code;
  code.alpha = Eigen::VectorXd::Zero(dict.n);
  const double x_norm = x_l.norm();
  if (x_norm < 1e-12) {
    code.residual_norm = x_norm;
    return code;
  }

  const double eps = cfg.epsilon * x_norm;
  const Eigen::VectorXd& inv = dict.inv_norms;
  const double lip = dict.lo_spectral_norm * dict.lo_spectral_norm;
  if (lip <= 0) {
    // All-dead dictionary: nothing representable.
    code.residual_norm = x_norm;
    code.converged = false;
    return code;
  }
  const double step = 1.0 / lip;

  const double corr_max =
      ((dict.lo.transpose() * x_l).cwiseProduct(inv)).cwiseAbs().maxCoeff();
  double weight = cfg.lasso_weight * corr_max;
  const double weight_floor = weight * 1e-14;

  // Work in the column-normalized coordinates beta = norms .* alpha;
  // D~ beta = D_l alpha throughout.
  const Eigen::Index n = dict.n;
  Eigen::VectorXd x_cur = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd x_prev = x_cur;
  Eigen::VectorXd y = x_cur;
  Eigen::VectorXd z(n), grad(n);
  double t = 1.0;

  auto residual_at = [&](const Eigen::VectorXd& beta) {
    return (dict.lo * beta.cwiseProduct(inv) - x_l).eval();
  };
  double res_cur = x_norm;  // residual norm at beta = 0
  double l1_cur = 0.0;

  // Per-stage cap keeps the continuation moving through the weight schedule
  // even when one stage converges slowly (coherent dictionaries have a large
  // Lipschitz constant); warm starts let later stages finish the job.
  const int stage_cap = std::max(25, cfg.max_iterations / 10);
  int used = 0;
  bool met = false;
  while (used < cfg.max_iterations && !met) {
    if (trace) trace->stage_starts.push_back(int(trace->objective.size()));
    double obj_cur = 0.5 * res_cur * res_cur + weight * l1_cur;
    int flat_iters = 0;
    int stage_iters = 0;
    while (used < cfg.max_iterations && stage_iters < stage_cap) {
      ++used;
      ++stage_iters;
      Eigen::VectorXd r_y = residual_at(y);
      grad = (dict.lo.transpose() * r_y).cwiseProduct(inv);
      for (Eigen::Index i = 0; i < n; ++i) {
        z[i] = soft_threshold(y[i] - step * grad[i], step * weight);
      }
      const double res_z = residual_at(z).norm();
      const double l1_z = z.template lpNorm<1>();
      const double obj_z = 0.5 * res_z * res_z + weight * l1_z;

      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      x_prev = x_cur;
      const double prev_obj = obj_cur;
      if (obj_z <= obj_cur) {
        x_cur = z;
        obj_cur = obj_z;
        res_cur = res_z;
        l1_cur = l1_z;
        y = x_cur + (t / t_next) * (z - x_cur) +
            ((t - 1.0) / t_next) * (x_cur - x_prev);
        t = t_next;
      } else {
        // Monotone guard: keep the iterate and restart the momentum.
        y = x_cur;
        t = 1.0;
      }
      if (trace) trace->objective.push_back(obj_cur);

      if (res_cur <= eps) break;
      const double drop = prev_obj - obj_cur;
      if (drop <= cfg.convergence_tol * std::max(obj_cur, 1e-30)) {
        if (++flat_iters >= 3) break;
      } else {
        flat_iters = 0;
      }
    }
    met = res_cur <= eps;
    if (!met) {
      weight *= 0.5;
      if (weight < weight_floor) break;
    }
  }

  code.alpha = x_cur.cwiseProduct(inv);
  code.residual_norm = (dict.lo * code.alpha - x_l).norm();
  code.converged = code.residual_norm <= eps;
  code.iterations = used;
  return code;
}

Eigen::VectorXd reconstruct_cs(const DictionaryPair& dict,
                               const Eigen::VectorXd& x_l,
                               const SolverConfig& cfg) {
  return dict.hi * solve_l1(dict, x_l, cfg).alpha;
}

Eigen::VectorXd reconstruct_lr(const Eigen::VectorXd& x_l,
                               const DegradeOperator& op) {
  if (op.down_factor != 1) {
    throw ParameterError(
        "reconstruct_lr: requires a blur-only operator (down_factor 1)");
  }
  if (x_l.size() != op.hi_dim()) {
    throw ParameterError("reconstruct_lr: expected length " +
                         std::to_string(op.hi_dim()) + ", got " +
                         std::to_string(x_l.size()));
  }
  return x_l;
}

Eigen::VectorXd reconstruct_bi(const Eigen::VectorXd& x_l, int patch_side,
                               int down_factor) {
  if (down_factor < 1 || patch_side < 1 || patch_side % down_factor != 0) {
    throw ParameterError("reconstruct_bi: invalid patch geometry");
  }
  const int L = patch_side / down_factor;
  if (x_l.size() % (std::size_t(L) * L) != 0) {
    throw ParameterError("reconstruct_bi: observation length " +
                         std::to_string(x_l.size()) +
                         " is not a multiple of " + std::to_string(L * L));
  }
  const int ch = int(x_l.size() / (L * L));
  const int H = patch_side;

  // Catmull-Rom taps, a = -0.5.
  auto cubic = [](double s) {
    s = std::abs(s);
    if (s <= 1.0) return 1.5 * s * s * s - 2.5 * s * s + 1.0;
    if (s < 2.0) return -0.5 * s * s * s + 2.5 * s * s - 4.0 * s + 2.0;
    return 0.0;
  };

  Eigen::VectorXd out(std::size_t(H) * H * ch);
  const double scale = double(L) / H;
  for (int c = 0; c < ch; ++c) {
    const double* src = x_l.data() + std::size_t(c) * L * L;
    double* dst = out.data() + std::size_t(c) * H * H;
    for (int y = 0; y < H; ++y) {
      const double fy = (y + 0.5) * scale - 0.5;
      const int y0 = int(std::floor(fy));
      for (int x = 0; x < H; ++x) {
        const double fx = (x + 0.5) * scale - 0.5;
        const int x0 = int(std::floor(fx));
        double acc = 0.0;
        for (int dy = -1; dy <= 2; ++dy) {
          const double wy = cubic(fy - (y0 + dy));
          if (wy == 0.0) continue;
          const int yy = std::clamp(y0 + dy, 0, L - 1);
          for (int dx = -1; dx <= 2; ++dx) {
            const double wx = cubic(fx - (x0 + dx));
            if (wx == 0.0) continue;
            const int xx = std::clamp(x0 + dx, 0, L - 1);
            acc += wy * wx * src[std::size_t(yy) * L + xx];
          }
        }
        dst[std::size_t(y) * H + x] = acc;
      }
    }
  }
  return out;
}

void save_dictionary(const DictionaryPair& dict, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("save_dictionary: cannot open " + path);
  os.write(kDictMagic, sizeof(kDictMagic));
  write_pod(os, std::uint32_t(dict.op.patch_side));
  write_pod(os, std::uint32_t(dict.op.channels));
  write_pod(os, std::uint32_t(dict.op.down_factor));
  write_pod(os, std::uint32_t(dict.n));
  write_pod(os, dict.op.blur_sigma);
  write_pod(os, dict.seed);
  write_pod(os, std::uint8_t(dict.mean_centered ? 1 : 0));
  const std::uint64_t checksum =
      fnv1a64(dict.lo.data(), sizeof(double) * dict.lo.size());
  write_pod(os, checksum);
  os.write(reinterpret_cast<const char*>(dict.hi.data()),
           sizeof(double) * dict.hi.size());
  if (!os) throw DataError("save_dictionary: write failed for " + path);
}

DictionaryPair load_dictionary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("load_dictionary: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kDictMagic, sizeof(magic)) != 0) {
    throw DataError("load_dictionary: bad magic in " + path);
  }
  DictionaryPair dict;
  dict.op.patch_side = int(read_pod<std::uint32_t>(is));
  dict.op.channels = int(read_pod<std::uint32_t>(is));
  dict.op.down_factor = int(read_pod<std::uint32_t>(is));
  const int n = int(read_pod<std::uint32_t>(is));
  dict.op.blur_sigma = read_pod<double>(is);
  dict.seed = read_pod<std::uint64_t>(is);
  dict.mean_centered = read_pod<std::uint8_t>(is) != 0;
  const std::uint64_t stored_checksum = read_pod<std::uint64_t>(is);
  dict.op.validate();
  dict.hi.resize(dict.op.hi_dim(), n);
  is.read(reinterpret_cast<char*>(dict.hi.data()),
          sizeof(double) * dict.hi.size());
  if (!is) throw DataError("load_dictionary: truncated file " + path);
  dict.finalize();
  const std::uint64_t checksum =
      fnv1a64(dict.lo.data(), sizeof(double) * dict.lo.size());
  if (checksum != stored_checksum) {
    throw DataError("load_dictionary: D_l checksum mismatch in " + path);
  }
  return dict;
}

}  // namespace rhm
