#include "rhm/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <vector>

#include "rhm/errors.hpp"

namespace rhm {

namespace {

// Lattice coordinates 0, s, 2s, ... with the last row/column appended so the
// interpolation never extrapolates.
std::vector<int> lattice_coords(int extent, int stride) {
  std::vector<int> coords;
  for (int v = 0; v < extent; v += stride) coords.push_back(v);
  if (coords.back() != extent - 1) coords.push_back(extent - 1);
  return coords;
}

int run_threads(int requested, std::size_t jobs) {
  int t = requested > 0 ? requested
                        : int(std::max(1u, std::thread::hardware_concurrency()));
  return int(std::min<std::size_t>(t, jobs));
}

}  // namespace

std::string method_name(ReconstructionMethod m) {
  switch (m) {
    case ReconstructionMethod::LR: return "lr";
    case ReconstructionMethod::BI: return "bi";
    case ReconstructionMethod::CS: return "cs";
  }
  return "?";
}

std::optional<ReconstructionMethod> parse_method(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), ::tolower);
  if (s == "lr") return ReconstructionMethod::LR;
  if (s == "bi") return ReconstructionMethod::BI;
  if (s == "cs") return ReconstructionMethod::CS;
  return std::nullopt;
}

double nmse(const Eigen::VectorXd& x_hat, const Eigen::VectorXd& x_h) {
  if (x_hat.size() != x_h.size()) {
    throw ParameterError("nmse: length mismatch " + std::to_string(x_hat.size()) +
                         " vs " + std::to_string(x_h.size()));
  }
  const double energy = x_h.squaredNorm();
  if (energy < 1e-12) return 0.0;
  return (x_hat - x_h).squaredNorm() / energy;
}

SaliencyMap compute_layer_saliency(const ImagePlane& layer,
                                   const DictionaryPair* dict,
                                   const DegradeOperator& op,
                                   const LayerSaliencyOptions& opts) {
  op.validate();
  if (opts.stride < 1) {
    throw ParameterError("compute_layer_saliency: stride must be >= 1");
  }
  if (layer.width < 1 || layer.height < 1) {
    throw ParameterError("compute_layer_saliency: empty layer");
  }
  if (opts.method == ReconstructionMethod::CS && dict == nullptr) {
    throw ParameterError("compute_layer_saliency: CS requires a dictionary");
  }

  const int H = op.patch_side;
  const DegradeOperator blur_only = op.with_down_factor(1);
  const std::vector<int> rows = lattice_coords(layer.height, opts.stride);
  const std::vector<int> cols = lattice_coords(layer.width, opts.stride);
  const std::size_t n_rows = rows.size();
  const std::size_t n_cols = cols.size();
  std::vector<double> lattice(n_rows * n_cols, 0.0);

  auto patch_saliency = [&](int row, int col) {
    const Eigen::VectorXd x_h = extract_patch(layer, row, col, H);
    switch (opts.method) {
      case ReconstructionMethod::LR: {
        const Eigen::VectorXd x_l = blur_only.apply(x_h);
        return nmse(reconstruct_lr(x_l, blur_only), x_h);
      }
      case ReconstructionMethod::BI: {
        const Eigen::VectorXd x_l = op.apply(x_h);
        return nmse(reconstruct_bi(x_l, H, op.down_factor), x_h);
      }
      case ReconstructionMethod::CS: {
        Eigen::VectorXd x_l = op.apply(x_h);
        if (dict->mean_centered) {
          const double dc = x_l.mean();
          x_l.array() -= dc;
          Eigen::VectorXd rec = dict->hi * solve_l1(*dict, x_l, opts.solver).alpha;
          rec.array() += dc;
          return nmse(rec, x_h);
        }
        return nmse(reconstruct_cs(*dict, x_l, opts.solver), x_h);
      }
    }
    return 0.0;
  };

  const std::size_t jobs = lattice.size();
  const int threads = run_threads(opts.threads, jobs);
  auto worker = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      lattice[k] = patch_saliency(rows[k / n_cols], cols[k % n_cols]);
    }
  };
  if (threads <= 1) {
    worker(0, jobs);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (jobs + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const std::size_t b = std::min(jobs, t * chunk);
      const std::size_t e = std::min(jobs, b + chunk);
      if (b < e) pool.emplace_back(worker, b, e);
    }
    for (auto& th : pool) th.join();
  }

  // Dense map: bilinear interpolation between lattice nodes.
  SaliencyMap raw(layer.width, layer.height);
  std::vector<std::size_t> row_cell(layer.height), col_cell(layer.width);
  for (int y = 0, cell = 0; y < layer.height; ++y) {
    while (cell + 2 < int(n_rows) && rows[cell + 1] <= y) ++cell;
    row_cell[y] = cell;
  }
  for (int x = 0, cell = 0; x < layer.width; ++x) {
    while (cell + 2 < int(n_cols) && cols[cell + 1] <= x) ++cell;
    col_cell[x] = cell;
  }
  for (int y = 0; y < layer.height; ++y) {
    const std::size_t ri = row_cell[y];
    const int r0 = rows[ri];
    const int r1 = rows[std::min(ri + 1, n_rows - 1)];
    const double fy = r1 > r0 ? double(y - r0) / (r1 - r0) : 0.0;
    for (int x = 0; x < layer.width; ++x) {
      const std::size_t ci = col_cell[x];
      const int c0 = cols[ci];
      const int c1 = cols[std::min(ci + 1, n_cols - 1)];
      const double fx = c1 > c0 ? double(x - c0) / (c1 - c0) : 0.0;
      const double v00 = lattice[ri * n_cols + ci];
      const double v01 = lattice[ri * n_cols + std::min(ci + 1, n_cols - 1)];
      const double v10 = lattice[std::min(ri + 1, n_rows - 1) * n_cols + ci];
      const double v11 =
          lattice[std::min(ri + 1, n_rows - 1) * n_cols + std::min(ci + 1, n_cols - 1)];
      const double top = v00 * (1 - fx) + v01 * fx;
      const double bot = v10 * (1 - fx) + v11 * fx;
      raw.at(y, x) = float(top * (1 - fy) + bot * fy);
    }
  }

  const double sigma =
      opts.blur_sigma >= 0 ? opts.blur_sigma : 0.025 * layer.width;
  SaliencyMap out = postprocess(raw, sigma);
  return out;
}

SaliencyMap postprocess(const SaliencyMap& raw, double blur_sigma) {
  if (blur_sigma < 0) {
    throw ParameterError("postprocess: blur sigma must be >= 0");
  }
  SaliencyMap out = raw;
  if (blur_sigma > 0) {
    std::vector<double> work(raw.values.begin(), raw.values.end());
    std::vector<double> blurred(work.size());
    detail::blur_plane(work.data(), blurred.data(), raw.width, raw.height,
                       blur_sigma);
    for (std::size_t i = 0; i < blurred.size(); ++i) {
      out.values[i] = float(blurred[i]);
    }
  }
  const auto [lo_it, hi_it] =
      std::minmax_element(out.values.begin(), out.values.end());
  const float lo = *lo_it;
  const float span = *hi_it - lo;
  if (span < 1e-12f) {
    std::fill(out.values.begin(), out.values.end(), 0.0f);
  } else {
    for (float& v : out.values) v = (v - lo) / span;
  }
  out.normalized = true;
  return out;
}

}  // namespace rhm
