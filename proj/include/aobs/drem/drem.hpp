#pragma once

#include <span>
#include <string>
#include <vector>

#include "aobs/matkit/mat.hpp"
#include "aobs/matkit/scaled.hpp"
#include "aobs/plant/plant.hpp"

namespace aobs::drem {

using matkit::Mat;
using matkit::ScaledMat;
using matkit::ScaledScalar;
using matkit::Vec;

/// Input filters driven by (y, u):
///   χ̇ = A_K χ + K y,  Ṗf = A_K Pf + φ(y,u),  Ω̇ = A_K Ω + G(y,u),  Φ̇_K = A_K Φ_K
/// with A_K = A − K C. The state is a flat block [χ | Pf | Ω (row-major) | Φ_K (row-major)].
class FilterBank {
 public:
  /// Throws DimensionError on shape mismatch and SolverError if A_K is not Hurwitz.
  FilterBank(const plant::KnownStructure& known, Mat K);

  std::size_t n() const noexcept { return n_; }
  std::size_t q() const noexcept { return q_; }
  std::size_t dim() const noexcept { return 2 * n_ + n_ * q_ + n_ * n_; }
  const Mat& K() const noexcept { return K_; }
  const Mat& AK() const noexcept { return AK_; }

  /// χ(t0) = χ0, Pf = 0, Ω = 0, Φ_K = I.
  Vec initial_state(std::span<const double> chi0) const;
  void rhs(std::span<const double> s, std::span<const double> y, std::span<const double> u,
           std::span<double> ds) const;

  std::span<const double> chi(std::span<const double> s) const { return s.subspan(0, n_); }
  std::span<const double> pf(std::span<const double> s) const { return s.subspan(n_, n_); }
  Mat omega(std::span<const double> s) const { return Mat::from_flat(n_, q_, s.subspan(2 * n_, n_ * q_)); }
  Mat phi_k(std::span<const double> s) const {
    return Mat::from_flat(n_, n_, s.subspan(2 * n_ + n_ * q_, n_ * n_));
  }

  /// z = 𝓛(y − Cχ − C·Pf), φᵀ = 𝓛CΩ with 𝓛 a row of ones.
  double z(std::span<const double> s, std::span<const double> y) const;
  void phi_into(std::span<const double> s, std::span<double> phi) const;

 private:
  plant::KnownStructure known_;
  std::size_t n_, q_;
  Mat K_, AK_;
  Vec c_sum_;  // 𝓛C
  mutable Vec yb_, ub_;
  mutable Mat g_;
};

struct RawRegression {
  double z = 0.0;
  Vec phi;
};

RawRegression raw_regression(const FilterBank& bank, std::span<const double> s, std::span<const double> y);

/// One sample of the signals entering the window extension.
/// Packed as [z, z_f, φ (q), φ_f (q)].
struct ExtensionSample {
  static std::size_t width(std::size_t q) noexcept { return 2 + 2 * q; }
};

/// Derivative of the window states [Y (2q) | Φ (2q×2q row-major)] given the
/// current and the T-delayed extension samples (zeros before t0).
///   Ẏ = (φ_s z̃ − φ_s(t−T) z̃(t−T)) / T,  Φ̇ = (φ_s φ_sᵀ − φ_s(t−T) φ_s(t−T)ᵀ) / T
/// with z̃ = z − z_f and φ_s = [φ; φ_f].
void extension_rhs(std::size_t q, std::span<const double> now, std::span<const double> delayed, double T,
                   std::span<double> d_window);

/// Selector and annihilator matrices for the disturbance split.
struct AnnihilatorConfig {
  Mat L1;  // 2q×2m
  Mat L2;  // 2q×(2q−2m)
  Mat Ht;  // 2m×2q
  std::size_t q = 0, m = 0;

  /// `l1t` is the 2m×2q 0/1 matrix 𝓛₁ᵀ; 𝓛₂ is the complementary selector.
  /// `ht` must have the form [S S]. Throws ValidationError listing every problem.
  static AnnihilatorConfig from_selectors(const Mat& l1t, const Mat& ht);
  /// Problems with a candidate (𝓛₁ᵀ, 𝓗ᵀ) pair; empty when valid.
  static std::vector<std::string> problems(const Mat& l1t, const Mat& ht);
  /// 𝓗ᵀ = [S S] with S the first 2m rows of I_q.
  static Mat default_ht(std::size_t q, std::size_t m);
  /// Duffing choice: 𝓛₁ᵀ = [[0,1,0,0],[0,0,0,1]], 𝓗ᵀ = [[1,0,1,0],[0,1,0,1]].
  static AnnihilatorConfig duffing();

  /// 𝓛₀ = [I_q 0].
  Mat L0() const;
};

struct Annihilated {
  ScaledMat lambda;     // 2q×1
  ScaledMat omega_mat;  // 2q×2q
  ScaledScalar M;       // det(𝓗ᵀ adj(Φ) 𝓛₁)
};

/// 𝓨 = adj(Φ)Y, B = 𝓗ᵀadj(Φ)𝓛₁, 𝓝 = adj(B)𝓗ᵀ𝓨, 𝓜 = det B,
/// λ = 𝓜Y − 𝓛₁𝓝, Ω_mat = 𝓜Φ. All in scaled arithmetic.
Annihilated annihilate(const AnnihilatorConfig& cfg, std::span<const double> Y, const Mat& Phi);

/// Ω̇_f = k(Ω_mat − Ω_f), λ̇_f = k(λ − λ_f), on the flat block [Ω_f (row-major) | λ_f].
void scalarize_rhs(std::span<const double> s, const Mat& omega_mat, std::span<const double> lambda, double k,
                   std::span<double> ds);

struct FinalRegression {
  ScaledMat Lambda;  // 2q×1
  ScaledScalar omega;
  ScaledScalar omega_dot;
};

/// Λ = adj(Ω_f)λ_f, ω = det Ω_f, ω̇ = tr(adj(Ω_f)·Ω̇_f) with Ω̇_f = k(Ω_mat − Ω_f).
/// `s_norm` multiplies Ω_f and λ_f (and Ω̇_f) before the determinant algebra.
FinalRegression final_regression(const Mat& omega_f, std::span<const double> lambda_f, const Mat& omega_mat,
                                 double k, const ScaledScalar& s_norm = 1.0);

}  // namespace aobs::drem
