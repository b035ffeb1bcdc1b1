#pragma once

// Straightforward reference implementations used to cross-check the library.
// Deliberately naive: plain loops, vectors of vectors, no shared code with src/.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace oracle {

using vec = std::vector<double>;
using mat = std::vector<std::vector<double>>;

// SSIM over whole images, population statistics.
double ssim(const vec& x, const vec& y, double k1 = 0.01, double k2 = 0.03, double L = 1.0);

// Gauss-Jordan inverse with partial pivoting.
mat invert(mat a);

// tr((cov(F) + ridge I)^-1 cov(E[F|Y])), class means weighted by frequency.
double hscore(const mat& features, const std::vector<int>& labels, double ridge);

mat sq_euclidean(const mat& src, const mat& tgt);

struct plan {
  mat coupling;
  std::size_t iterations = 0;
};

// Scaling-domain Sinkhorn with uniform marginals, iterated until no
// marginal moves by more than tol.
plan sinkhorn(const mat& cost, double epsilon, double tol = 1e-14,
              std::size_t max_iters = 2'000'000);

mat joint(const mat& coupling, const std::vector<int>& src_labels,
          const std::vector<int>& tgt_labels, int n_src_classes, int n_tgt_classes);

// sum P(s,t) log(P(s,t) / P(s)).
double neg_conditional_entropy(const mat& joint);

double otce(const mat& src, const std::vector<int>& src_labels, const mat& tgt,
            const std::vector<int>& tgt_labels, double epsilon);

// Documented counter RNG and partial Fisher-Yates, re-derived from the format notes.
class reference_rng {
 public:
  reference_rng(std::uint64_t seed, std::uint64_t stream);
  std::uint64_t next();
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t key_;
  std::uint64_t k_ = 0;
};

std::vector<std::size_t> reference_sample(std::size_t n, std::size_t m, std::uint64_t seed);

// Footrule by explicit position lookup.
long footrule(const std::vector<std::string>& a, const std::vector<std::string>& b);

}  // namespace oracle
