#include "aobs/plant/plant.hpp"

#include <cmath>

#include "aobs/errors.hpp"

namespace aobs::plant {

double SignalChannel::value(double t) const noexcept {
  double v = constant;
  for (const auto& s : terms) {
    const double arg = s.frequency * t + s.phase;
    v += s.amplitude * (s.wave == Sinusoid::Wave::Sin ? std::sin(arg) : std::cos(arg));
  }
  return v;
}

double SignalChannel::derivative(double t) const noexcept {
  double v = 0.0;
  for (const auto& s : terms) {
    const double arg = s.frequency * t + s.phase;
    v += s.amplitude * s.frequency * (s.wave == Sinusoid::Wave::Sin ? std::cos(arg) : -std::sin(arg));
  }
  return v;
}

Vec Signal::operator()(double t) const {
  Vec out(channels_.size());
  eval_into(t, out);
  return out;
}

void Signal::eval_into(double t, std::span<double> out) const noexcept {
  for (std::size_t i = 0; i < channels_.size(); ++i) out[i] = channels_[i].value(t);
}

Vec Signal::derivative(double t) const {
  Vec out(channels_.size());
  for (std::size_t i = 0; i < channels_.size(); ++i) out[i] = channels_[i].derivative(t);
  return out;
}

OutputMaps::OutputMaps(std::size_t n, std::size_t q, std::vector<Expr> phi, std::vector<Expr> g)
    : n_(n), q_(q), phi_(std::move(phi)), g_(std::move(g)) {
  if (phi_.size() != n_) throw DimensionError("phi needs one expression per state");
  if (g_.size() != n_ * q_) throw DimensionError("G needs n·q expressions");
  phi_zero_ = true;
  for (const auto& e : phi_) phi_zero_ = phi_zero_ && e.is_zero();
}

void OutputMaps::phi_into(std::span<const double> y, std::span<const double> u, std::span<double> out) const {
  for (std::size_t i = 0; i < n_; ++i) out[i] = phi_zero_ ? 0.0 : phi_[i].eval(y, u);
}

void OutputMaps::g_into(std::span<const double> y, std::span<const double> u, Mat& out) const {
  if (out.rows() != n_ || out.cols() != q_) out = Mat(n_, q_);
  auto flat = out.flat();
  for (std::size_t k = 0; k < g_.size(); ++k) flat[k] = g_[k].is_zero() ? 0.0 : g_[k].eval(y, u);
}

Vec OutputMaps::phi(std::span<const double> y, std::span<const double> u) const {
  Vec out(n_);
  phi_into(y, u, out);
  return out;
}

Mat OutputMaps::g(std::span<const double> y, std::span<const double> u) const {
  Mat out(n_, q_);
  g_into(y, u, out);
  return out;
}

std::vector<std::string> PlantModel::problems() const {
  std::vector<std::string> p;
  const std::size_t n = known.A.rows();
  if (!known.A.is_square()) p.push_back("A must be square");
  if (known.C.cols() != n) p.push_back("C must have n = " + std::to_string(n) + " columns");
  if (known.D.rows() != n) p.push_back("D must have n = " + std::to_string(n) + " rows");
  if (known.maps.n() != n) p.push_back("phi/G must have n = " + std::to_string(n) + " rows");
  if (theta_true.size() != known.maps.q()) p.push_back("theta must have q = " + std::to_string(known.maps.q()) + " entries");
  if (delta.width() != known.D.cols()) p.push_back("delta must have s = " + std::to_string(known.D.cols()) + " channels");
  if (x0.size() != n) p.push_back("x0 must have n = " + std::to_string(n) + " entries");
  if (known.C.rows() == 0) p.push_back("C must have at least one row");
  if (known.maps.q() == 0) p.push_back("G must have at least one column (q >= 1)");
  return p;
}

PlantModel duffing_preset(double amplitude) {
  PlantModel m;
  m.known.A = Mat{{0.0, 1.0}, {1.0, -0.2}};
  m.known.C = Mat{{1.0, 0.0}};
  m.known.D = Mat{{1.0}, {0.0}};
  m.known.maps = OutputMaps(2, 2, {Expr(), Expr()},
                            {Expr(), Expr(), Expr::parse("u", 1, 1), Expr::parse("-y^3", 1, 1)});
  m.theta_true = {1.0, 3.0};
  m.x0 = {2.0, 1.0};
  m.delta = Signal({SignalChannel{0.0, {Sinusoid{0.5, 2.0, 0.0, Sinusoid::Wave::Sin}}}});
  m.input = Signal({SignalChannel{0.0, {Sinusoid{amplitude, 1.0, 0.0, Sinusoid::Wave::Cos}}}});
  return m;
}

Vec output(const KnownStructure& known, std::span<const double> x) { return known.C * x; }

Vec plant_rhs(const PlantModel& model, double t, std::span<const double> x) {
  const auto& k = model.known;
  const Vec y = k.C * x;
  const Vec u = model.input(t);
  const Vec phi = k.maps.phi(y, u);
  const Mat g = k.maps.g(y, u);
  if (!matkit::all_finite(phi) || !g.all_finite())
    throw PlantFault("plant: phi/G not finite at t=" + std::to_string(t));
  Vec dx = k.A * x;
  const Vec gtheta = g * model.theta_true;
  const Vec ddelta = k.D * model.delta(t);
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += phi[i] + gtheta[i] + ddelta[i];
  return dx;
}

}  // namespace aobs::plant
