#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "absorb/sampler.hpp"

namespace absorb {

/// Columns chain,iter then the model's parameters in export order; iter is the
/// 1-based sampler iteration the draw was taken at.
std::string draws_csv(const PosteriorDraws& draws);

/// Inverse of draws_csv. The model is inferred from the columns (a selection
/// model unless the gamma/rho1/rho2 columns are absent). Throws DataError.
PosteriorDraws parse_draws_csv(std::string_view text);

/// Model tag, dataset fingerprint, and per-parameter mean, sd and 95% interval.
std::string summary_json(const PosteriorDraws& draws);

std::string diagnostics_json(const DiagnosticsReport& report);

/// Reads draws.csv and summary.json from a fit directory. Throws DataError.
PosteriorDraws load_fit(const std::filesystem::path& dir);

}  // namespace absorb
