#include <cstdio>
#include <vector>

#include "vitals/stats.hpp"

int main() {
  using vitals::PairedSample;
  using vitals::Quantity;
  const std::vector<PairedSample> pairs = {
      {"1", Quantity::Sbp, 118, 121}, {"2", Quantity::Sbp, 131, 127}, {"3", Quantity::Sbp, 109, 115},
      {"4", Quantity::Sbp, 142, 139}, {"5", Quantity::Sbp, 125, 133}, {"6", Quantity::Sbp, 117, 119},
  };
  const auto r = vitals::agreement_report(pairs, Quantity::Sbp);
  std::printf("n=%zu  MAE %.2f  RMSE %.2f  MedAE %.2f  %%err %.2f\n", r.n, r.mae, r.rmse, r.medae, r.pct_error_mae);
  std::printf("bias %.2f  sd %.2f  LoA [%.2f, %.2f]\n", r.bias, r.sd, r.loa_low, r.loa_high);
  std::printf("Spearman rho %.3f  p %.3f\n", *r.spearman_rho, *r.p_value);
}
