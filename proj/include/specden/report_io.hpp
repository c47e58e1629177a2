#pragma once

#include <string>
#include <vector>

#include "specden/fixedpoint.hpp"
#include "specden/mimo.hpp"
#include "specden/model.hpp"
#include "specden/montecarlo.hpp"
#include "specden/spectrum.hpp"

namespace specden {

/// Shortest form that keeps 17 significant digits ("%.17g").
std::string format_double(double x);

/// Header `x,lsd` followed by `mu_j,mu_tilde_j` for each requested column
/// (0-based j, written 1-based in the header).
std::string density_csv(const DensityProfile& profile, const std::vector<Index>& columns);

/// Header `trial,index,value`; indices 1-based, eigenvalues descending.
std::string eigenvalues_csv(const std::vector<VectorXd>& per_trial);

/// Header `snr_db,asymptotic,mc_mean,mc_se`.
std::string sinr_csv(const std::vector<SinrPoint>& points);

std::string solution_json(const Solution& sol, bool include_vectors);
std::string assumption_report_json(const AssumptionReport& report);
std::string support_json(const SupportSet& support);
std::string inclusion_json(const InclusionReport& report);
std::string edge_gap_json(const EdgeGapReport& report);
std::string trial_report_json(const TrialReport& report);
std::string largest_eigenvalue_json(const LargestEigenvalueSummary& summary);
std::string resolvent_trial_json(const ResolventTrialResult& result);
std::string zf_report_json(const ZfReport& report);
std::string density_summary_json(const DensityProfile& profile);

} // namespace specden
