#define EIGEN_DONT_PARALLELIZE

#include "hkwave/coherent_sum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hkwave {

namespace {

void check_prefixes(std::span<const std::size_t> prefixes, std::size_t available) {
  if (prefixes.empty()) throw std::invalid_argument("coherent_sum_distance: no prefixes requested");
  std::size_t prev = 0;
  for (std::size_t n : prefixes) {
    if (n == 0 || n <= prev || n > available)
      throw std::invalid_argument("coherent_sum_distance: prefixes must be ascending and within the sample count");
    prev = n;
  }
}

// Per-sample data in the number-state representation centred on psi0.
struct FockSample {
  Complex alpha[kMaxDim];
  double mass;        // sum_k |alpha_k|^2
  Complex amplitude;  // exp(log_coef + i phi - mass / 2)
  double log_weight;  // 2 Re log_coef
};

FockSample fock_sample(const GaussianWavepacket& psi0, std::span<const double> z, Complex log_coef) {
  const int d = psi0.dim();
  const double hbar = psi0.hbar();
  const double scale = 1.0 / std::sqrt(2.0 * hbar);
  double dq[kMaxDim], dp[kMaxDim];
  double phase = 0.0;
  for (int i = 0; i < d; ++i) {
    dq[i] = z[i] - psi0.q()[i];
    dp[i] = z[d + i] - psi0.p()[i];
    phase -= (0.5 * dp[i] + psi0.p()[i]) * dq[i];
  }
  FockSample s{};
  s.mass = 0.0;
  for (int i = 0; i < d; ++i) {
    double re = 0.0, im = 0.0;
    for (int k = 0; k < d; ++k) {
      re += psi0.gamma_sqrt()(i, k) * dq[k];
      im += psi0.gamma_inv_sqrt()(i, k) * dp[k];
    }
    s.alpha[i] = Complex{re, im} * scale;
    s.mass += std::norm(s.alpha[i]);
  }
  s.amplitude = std::exp(log_coef + Complex{-0.5 * s.mass, phase / hbar});
  s.log_weight = 2.0 * log_coef.real();
  return s;
}

// Multi-indices of `dim` components with total degree <= max_degree, ordered by degree.
struct SimplexList {
  int dim = 0;
  std::vector<int> index;               // dim entries per multi-index
  std::vector<int> degree;
  std::vector<std::size_t> shell_start;  // first position of each degree, plus the end

  SimplexList(int d, int max_degree) : dim(d) {
    std::vector<int> cur(static_cast<std::size_t>(std::max(d, 1)), 0);
    for (int s = 0; s <= max_degree; ++s) {
      shell_start.push_back(degree.size());
      emit(cur, 0, s, s);
    }
    shell_start.push_back(degree.size());
  }

  std::size_t count(int max_degree) const { return max_degree < 0 ? 0 : shell_start[static_cast<std::size_t>(max_degree) + 1]; }
  const int* operator[](std::size_t i) const { return index.data() + i * static_cast<std::size_t>(dim); }

 private:
  void emit(std::vector<int>& cur, int k, int left, int s) {
    if (k + 1 >= dim) {
      if (dim > 0) cur[static_cast<std::size_t>(k)] = left;
      else if (left != 0) return;
      index.insert(index.end(), cur.begin(), cur.begin() + dim);
      degree.push_back(s);
      return;
    }
    for (int n = left; n >= 0; --n) {
      cur[static_cast<std::size_t>(k)] = n;
      emit(cur, k + 1, left - n, s);
    }
  }
};

// Coefficients on the number states of total degree <= L. The D indices are split into a
// head and a tail half; for every head h the tails of degree <= L - |h| are stored
// contiguously in degree order, so the sum over a sample group is a product of two
// dense matrices (tail products)^T x (head products) whose columns land on prefixes.
class FockTable {
  using CMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;
  using CVector = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;

 public:
  using Matrix = CMatrix;
  using Vector = CVector;

  FockTable(int dim, int max_degree)
      : d_(dim), dh_(dim / 2), l_(max_degree), head_(dim / 2, max_degree), tail_(dim - dim / 2, max_degree) {
    base_.resize(head_.degree.size());
    std::size_t total = 0;
    for (std::size_t h = 0; h < base_.size(); ++h) {
      base_[h] = total;
      total += tail_.count(l_ - head_.degree[h]);
    }
    values_.assign(total, Complex{});
  }

  static std::size_t states(int dim, int max_degree) {
    // C(L + D, D) with overflow saturation
    long double c = 1.0L;
    for (int k = 1; k <= dim; ++k) c = c * (max_degree + k) / k;
    return c > 1e18L ? std::numeric_limits<std::size_t>::max() : static_cast<std::size_t>(c + 0.5L);
  }

  double distance_squared(double n) const {
    const double inv = 1.0 / n;
    double sum = std::norm(values_[0] * inv - 1.0);
    for (std::size_t k = 1; k < values_.size(); ++k) sum += std::norm(values_[k] * inv);
    return sum;
  }

  // Adds sum_j amp_j prod_k v_k(j, n_k) for all multi-indices of total degree <= m (and a
  // few more where they fit). Column n of v[k] holds (a_jk)^n / sqrt(n!) for one group.
  void add_group(const std::vector<CMatrix>& v, const CVector& amp, int m) {
    const auto rows = amp.size();
    const std::size_t nh = head_.count(m), nt = tail_.count(m);
    heads_.resize(rows, static_cast<Eigen::Index>(nh));
    tails_.resize(rows, static_cast<Eigen::Index>(nt));
    for (std::size_t i = 0; i < nh; ++i) {
      auto col = heads_.col(static_cast<Eigen::Index>(i));
      col = amp;
      for (int k = 0; k < dh_; ++k) col.array() *= v[static_cast<std::size_t>(k)].col(head_[i][k]).array();
    }
    for (std::size_t i = 0; i < nt; ++i) {
      auto col = tails_.col(static_cast<Eigen::Index>(i));
      col = v[static_cast<std::size_t>(dh_)].col(tail_[i][0]);
      for (int k = 1; k < d_ - dh_; ++k)
        col.array() *= v[static_cast<std::size_t>(dh_ + k)].col(tail_[i][k]).array();
    }

    // Bands of consecutive head degrees; each band multiplies against the tails its
    // lowest degree needs. Bands write disjoint parts of the table.
    bands_.clear();
    for (int s = 0; s <= m;) {
      int e = s;
      while (e < m && head_.count(e) - head_.count(s - 1) < kBandRows) ++e;
      bands_.push_back({s, e});
      s = e + 1;
    }
#pragma omp parallel
    {
      CMatrix g;
#pragma omp for schedule(dynamic, 1)
      for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(bands_.size()); ++b) {
        const auto [s, e] = bands_[static_cast<std::size_t>(b)];
        const std::size_t r0 = head_.count(s - 1), r1 = head_.count(e);
        const std::size_t nc = tail_.count(m - s);
        g.noalias() = tails_.leftCols(static_cast<Eigen::Index>(nc)).transpose() *
                      heads_.middleCols(static_cast<Eigen::Index>(r0), static_cast<Eigen::Index>(r1 - r0));
        for (std::size_t h = r0; h < r1; ++h) {
          const std::size_t n = std::min(nc, tail_.count(l_ - head_.degree[h]));
          Complex* out = values_.data() + base_[h];
          const Complex* in = g.col(static_cast<Eigen::Index>(h - r0)).data();
          for (std::size_t k = 0; k < n; ++k) out[k] += in[k];
        }
      }
    }
  }

 private:
  static constexpr std::size_t kBandRows = 32;

  int d_, dh_, l_;
  SimplexList head_, tail_;
  std::vector<std::size_t> base_;
  std::vector<Complex> values_;
  CMatrix heads_, tails_;
  std::vector<std::pair<int, int>> bands_;
};

constexpr std::size_t kGroup = 256;

std::vector<double> fock_distance(const GaussianWavepacket& psi0, const std::vector<FockSample>& samples,
                                  const std::vector<int>& degree, int max_degree,
                                  std::span<const std::size_t> prefixes) {
  const int d = psi0.dim();
  FockTable table(d, max_degree);
  std::vector<double> out;
  out.reserve(prefixes.size());

  std::vector<FockTable::Matrix> v(static_cast<std::size_t>(d));
  FockTable::Vector amp;
  std::vector<std::size_t> order;
  std::size_t start = 0;
  for (std::size_t prefix : prefixes) {
    // Samples of one segment are grouped by cutoff degree so each group works on a
    // compact corner of the table.
    order.resize(prefix - start);
    for (std::size_t j = 0; j < order.size(); ++j) order[j] = start + j;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return degree[x] < degree[y]; });
    for (std::size_t g0 = 0, count = 0; g0 < order.size(); g0 += count) {
      // Work grows like degree^D, so a group only spans a narrow band of degrees.
      const int limit = degree[order[g0]] + std::max(1, degree[order[g0]] / 16);
      count = 1;
      while (count < kGroup && g0 + count < order.size() && degree[order[g0 + count]] <= limit) ++count;
      const int m = degree[order[g0 + count - 1]];
      amp.resize(static_cast<Eigen::Index>(count));
      for (int k = 0; k < d; ++k) v[static_cast<std::size_t>(k)].resize(static_cast<Eigen::Index>(count), m + 1);
      for (std::size_t j = 0; j < count; ++j) {
        const FockSample& s = samples[order[g0 + j]];
        const auto row = static_cast<Eigen::Index>(j);
        amp(row) = s.amplitude;
        for (int k = 0; k < d; ++k) {
          auto& vk = v[static_cast<std::size_t>(k)];
          const Complex alpha = s.alpha[k];
          Complex term{1.0, 0.0};
          vk(row, 0) = term;
          for (int n = 1; n <= m; ++n) {
            term = term * alpha / std::sqrt(static_cast<double>(n));
            vk(row, n) = term;
          }
        }
      }
      table.add_group(v, amp, m);
    }
    start = prefix;
    out.push_back(std::sqrt(table.distance_squared(static_cast<double>(prefix))));
  }
  return out;
}

std::vector<double> pairwise_distance(const GaussianWavepacket& psi0, const PhaseSpaceSamples& points,
                                      std::span<const Complex> log_coef, std::span<const std::size_t> prefixes) {
  const Eigen::VectorXd z0v = psi0.center();
  const std::span<const double> z0{z0v.data(), static_cast<std::size_t>(z0v.size())};
  const std::size_t n_max = prefixes.back();

  // row[j] = |c_j|^2 + 2 Re sum_{l<j} conj(c_l) c_j <g_l|g_j>,  cross[j] = c_j <psi0|g_j>
  std::vector<double> row(n_max);
  std::vector<Complex> cross(n_max);
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t jj = 0; jj < static_cast<std::ptrdiff_t>(n_max); ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    const Complex lj = log_coef[j];
    Complex sum{};
    for (std::size_t l = 0; l < j; ++l) sum += std::exp(std::conj(log_coef[l]) + lj + log_overlap(psi0, points[l], points[j]));
    row[j] = std::exp(2.0 * lj.real()) + 2.0 * sum.real();
    cross[j] = std::exp(lj + log_overlap(psi0, z0, points[j]));
  }
  std::vector<double> out;
  double gram = 0.0;
  Complex overlap{};
  std::size_t j = 0;
  for (std::size_t prefix : prefixes) {
    for (; j < prefix; ++j) {
      gram += row[j];
      overlap += cross[j];
    }
    const double n = static_cast<double>(prefix);
    const double d2 = gram / (n * n) - 2.0 * overlap.real() / n + 1.0;
    out.push_back(std::sqrt(std::max(d2, 0.0)));
  }
  return out;
}

int poisson_cutoff_log(double mean, double log_eps) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw std::invalid_argument("poisson_cutoff: mean must be finite and >= 0");
  if (mean == 0.0 || log_eps >= 0.0) return 0;
  const double log_mean = std::log(mean);
  int m = static_cast<int>(std::floor(mean));
  for (;; ++m) {
    if (m + 2 <= mean) continue;
    // P(X > m) <= P(X = m+1) / (1 - mean/(m+2)) once the terms decrease.
    const double log_p = -mean + (m + 1) * log_mean - std::lgamma(m + 2.0);
    const double bound = log_p - std::log1p(-mean / (m + 2.0));
    if (bound <= log_eps) return m;
  }
}

}  // namespace

int poisson_cutoff(double mean, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("poisson_cutoff: eps must be positive");
  return poisson_cutoff_log(mean, std::log(eps));
}

std::vector<double> coherent_sum_distance(const GaussianWavepacket& psi0, const PhaseSpaceSamples& points,
                                          std::span<const Complex> log_coef, std::span<const std::size_t> prefixes,
                                          const CoherentSumOptions& options) {
  if (points.dim() != psi0.dim()) throw std::invalid_argument("coherent_sum_distance: dimension mismatch");
  if (log_coef.size() != points.size())
    throw std::invalid_argument("coherent_sum_distance: one coefficient per point is required");
  check_prefixes(prefixes, points.size());
  const std::size_t n = prefixes.back();
  const int d = psi0.dim();

  if (options.backend == CoherentSumBackend::Pairwise) return pairwise_distance(psi0, points, log_coef, prefixes);

  std::vector<FockSample> samples(n);
  std::vector<int> degree(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t jj = 0; jj < static_cast<std::ptrdiff_t>(n); ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    samples[j] = fock_sample(psi0, points[j], log_coef[j]);
    degree[j] = poisson_cutoff_log(samples[j].mass, std::log(options.tail_tolerance) - samples[j].log_weight);
  }
  const int max_degree = *std::max_element(degree.begin(), degree.end());
  const std::size_t states = FockTable::states(d, max_degree);

  if (options.backend == CoherentSumBackend::Auto) {
    double fock_work = static_cast<double>(prefixes.size()) * static_cast<double>(states);
    for (int m : degree) fock_work += static_cast<double>(FockTable::states(d, m));
    const double pair_work = 8.0 * d * 0.5 * static_cast<double>(n) * static_cast<double>(n);
    if (states > options.max_states || pair_work < fock_work)
      return pairwise_distance(psi0, points, log_coef, prefixes);
  } else if (states > options.max_states) {
    throw std::length_error("coherent_sum_distance: number-state table exceeds max_states");
  }
  return fock_distance(psi0, samples, degree, max_degree, prefixes);
}

std::vector<double> initial_sampling_error(const SamplingScheme& scheme, std::span<const std::size_t> prefixes,
                                           std::uint64_t seed, std::uint32_t stream,
                                           const CoherentSumOptions& options) {
  check_prefixes(prefixes, std::numeric_limits<std::size_t>::max());
  const std::size_t n = prefixes.back();
  const PhaseSpaceSamples points = scheme.sample(n, seed, stream);
  std::vector<Complex> log_coef(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(n); ++j)
    log_coef[static_cast<std::size_t>(j)] = scheme.log_prefactor(points[static_cast<std::size_t>(j)]);
  return coherent_sum_distance(scheme.reference(), points, log_coef, prefixes, options);
}

}  // namespace hkwave
