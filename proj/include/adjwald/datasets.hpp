#pragma once

// Embedded datasets used by the tests, the acceptance harness and the CLI
// demos. The same data ship as CSV files under data/.

#include <array>
#include <cmath>

#include "adjwald/beta.hpp"
#include "adjwald/glm/model.hpp"

namespace adjwald::datasets {

// Mean blood clotting times (seconds) at nine percentage concentrations of
// normal plasma, for two lots of clotting agent (McCullagh & Nelder, 1989).
inline constexpr std::array<double, 9> kClottingConcentration = {5, 10, 15, 20, 30, 40, 60, 80, 100};
inline constexpr std::array<double, 9> kClottingLot1 = {118, 58, 42, 35, 27, 25, 21, 19, 18};
inline constexpr std::array<double, 9> kClottingLot2 = {69, 35, 26, 21, 18, 16, 13, 12, 12};

/// Gamma regression with log link on (1, log u, lot2, log u * lot2), where
/// lot2 is 1 for the second lot.
inline glm::GlmModel clotting_model() {
  glm::GlmSpec s;
  s.family = glm::FamilyLink::parse("gamma-log");
  s.X.resize(18, 4);
  s.y.resize(18);
  for (int lot = 0; lot < 2; ++lot) {
    for (int i = 0; i < 9; ++i) {
      const int r = lot * 9 + i;
      const double lu = std::log(kClottingConcentration[static_cast<std::size_t>(i)]);
      s.X.row(r) << 1.0, lu, lot, lot * lu;
      s.y(r) = lot == 0 ? kClottingLot1[static_cast<std::size_t>(i)] : kClottingLot2[static_cast<std::size_t>(i)];
    }
  }
  s.coef_names = {"(Intercept)", "log_u", "lot2", "log_u:lot2"};
  return glm::GlmModel(std::move(s));
}

// Reading accuracy of 44 children (Smithson & Verkuilen, 2006), with
// dyslexia coded +1 (dyslexic) / -1 (control) and standardized IQ.
inline constexpr std::array<double, 44> kReadingAccuracy = {
    0.88386, 0.76524, 0.91508, 0.98376, 0.88386, 0.70905, 0.77148, 0.99,    0.99,    0.99,    0.99,
    0.99,    0.99,    0.99,    0.99,    0.99,    0.70281, 0.99,    0.66535, 0.99,    0.95878, 0.99,
    0.73402, 0.64662, 0.99,    0.57794, 0.64038, 0.45932, 0.65286, 0.60916, 0.60916, 0.54048, 0.5717,
    0.70281, 0.56546, 0.53424, 0.57794, 0.69032, 0.54673, 0.68408, 0.59043, 0.62165, 0.67159, 0.66535};
inline constexpr std::array<double, 44> kReadingDyslexia = {
    -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1,
    -1, -1, -1, 1,  1,  1,  1,  1,  1,  1,  1,  1,  1,  1,  1,  1,  1,  1,  1,  1,  1,  1};
inline constexpr std::array<double, 44> kReadingIq = {
    0.827,  0.59,   0.471,  1.144,  -0.676, -0.795, -0.281, -0.914, -0.043, 0.907,  0.511,
    1.223,  0.59,   1.856,  -0.399, 0.59,   -0.043, 1.738,  0.471,  1.619,  1.144,  -0.201,
    -0.281, 0.59,   1.777,  -0.083, -0.162, -0.795, -0.281, -0.874, 0.313,  0.709,  1.223,
    -1.23,  -0.162, -0.993, -1.191, -1.745, -1.745, -0.439, -1.666, -1.507, -0.518, -1.27};

/// Mean model (1, dyslexia, iq, dyslexia * iq); precision model (1, dyslexia, iq).
inline beta::BetaModel reading_skills_model() {
  beta::BetaSpec s;
  const Index n = 44;
  s.X.resize(n, 4);
  s.Z.resize(n, 3);
  s.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double d = kReadingDyslexia[k], iq = kReadingIq[k];
    s.X.row(i) << 1.0, d, iq, d * iq;
    s.Z.row(i) << 1.0, d, iq;
    s.y(i) = kReadingAccuracy[k];
  }
  s.mean_names = {"(Intercept)", "dyslexia", "iq", "dyslexia:iq"};
  s.precision_names = {"(phi)_(Intercept)", "(phi)_dyslexia", "(phi)_iq"};
  return beta::BetaModel(std::move(s));
}

}  // namespace adjwald::datasets
