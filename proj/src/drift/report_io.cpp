// Copyright 2026 The vaelfa Authors
// SPDX-License-Identifier: Apache-2.0

#include "vaelfa/format.hpp"
#include "vaelfa/trajectory.hpp"

namespace vaelfa {

void write_drift_report_csv(std::ostream& out, const DriftReport& report) {
  for (const auto& [key, value] : report.header) {
    out << "# " << key << '=' << value << '\n';
  }
  out << "turn,l1,l2,ssim,low_band_energy,high_band_energy,mu_disp,sigma_disp\n";
  for (const auto& r : report.turns) {
    out << r.turn << ',' << format_double(r.l1) << ',' << format_double(r.l2)
        << ',' << format_double(r.ssim) << ',' << format_double(r.low_band_energy)
        << ',' << format_double(r.high_band_energy) << ','
        << format_double(r.mu_disp) << ',' << format_double(r.sigma_disp) << '\n';
  }
}

}  // namespace vaelfa
