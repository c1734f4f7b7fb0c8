#include "cmmnl/types.hpp"

#include <Eigen/Cholesky>

#include <sstream>

namespace cmmnl {

Eigen::Index ChoiceDataset::n_occasions() const {
  Eigen::Index t = 0;
  for (const auto& ind : individuals)
    t += static_cast<Eigen::Index>(ind.occasions.size());
  return t;
}

bool ChoiceDataset::has_path_size() const {
  for (const auto& ind : individuals)
    for (const auto& occ : ind.occasions) return occ.has_path_size();
  return false;
}

void ChoiceDataset::validate() const {
  if (individuals.empty()) throw ValidationError("dataset has no individuals");
  const Eigen::Index P = n_params();
  if (P < 1) throw ValidationError("dataset must have at least one parameter column");
  if (static_cast<Eigen::Index>(column_names.size()) != P)
    throw ValidationError("column_names length does not match L+K");
  if (context_names.size() != context_kinds.size())
    throw ValidationError("context_names and context_kinds disagree");
  const Eigen::Index C = context_dim();
  const bool ps = has_path_size();
  Eigen::Index common_J = -1;
  for (const auto& ind : individuals) {
    if (ind.occasions.empty()) {
      std::ostringstream os;
      os << "individual " << ind.individual_id << " has no occasions";
      throw ValidationError(os.str());
    }
    for (const auto& occ : ind.occasions) {
      std::ostringstream os;
      os << "individual " << ind.individual_id << ", occasion " << occ.occasion_id << ": ";
      const Eigen::Index J = occ.n_alternatives();
      if (J < 2) throw ValidationError(os.str() + "fewer than two alternatives");
      if (occ.attributes.cols() != P)
        throw ValidationError(os.str() + "attribute column count does not match L+K");
      if (!occ.attributes.allFinite())
        throw ValidationError(os.str() + "non-finite attribute value");
      if (occ.availability.size() != J)
        throw ValidationError(os.str() + "availability length mismatch");
      if (occ.n_available() < 2)
        throw ValidationError(os.str() + "fewer than two available alternatives");
      if (occ.chosen < 0 || occ.chosen >= J)
        throw ValidationError(os.str() + "chosen index out of range");
      if (!occ.availability(occ.chosen))
        throw ValidationError(os.str() + "chosen alternative is unavailable");
      if (occ.context.size() != C)
        throw ValidationError(os.str() + "context length mismatch");
      if (occ.context.size() > 0 && !occ.context.allFinite())
        throw ValidationError(os.str() + "non-finite context value");
      if (occ.has_path_size() != ps)
        throw ValidationError(os.str() + "inconsistent path-size presence across occasions");
      if (occ.has_path_size() && occ.log_path_size.size() != J)
        throw ValidationError(os.str() + "log path size length mismatch");
      if (static_cast<Eigen::Index>(occ.alt_ids.size()) != J)
        throw ValidationError(os.str() + "alt_ids length mismatch");
      if (!variable_choice_set) {
        if (common_J < 0) common_J = J;
        if (J != common_J)
          throw ValidationError(os.str() +
                                "varying alternative count without variable_choice_set");
      }
      for (Eigen::Index c = 0; c < C; ++c) {
        if (context_kinds[c] == ContextKind::binary && occ.context(c) != 0.0 &&
            occ.context(c) != 1.0)
          throw ValidationError(os.str() + "binary context column '" + context_names[c] +
                                "' has a value outside {0,1}");
      }
    }
  }
}

bool ChoiceDataset::operator==(const ChoiceDataset& other) const {
  if (column_names != other.column_names || context_names != other.context_names ||
      context_kinds != other.context_kinds || n_fixed != other.n_fixed ||
      n_random != other.n_random || individuals.size() != other.individuals.size())
    return false;
  for (std::size_t i = 0; i < individuals.size(); ++i) {
    const auto& a = individuals[i];
    const auto& b = other.individuals[i];
    if (a.individual_id != b.individual_id || a.occasions.size() != b.occasions.size())
      return false;
    for (std::size_t t = 0; t < a.occasions.size(); ++t) {
      const auto& x = a.occasions[t];
      const auto& y = b.occasions[t];
      if (x.occasion_id != y.occasion_id || x.chosen != y.chosen ||
          x.alt_ids != y.alt_ids || x.attributes.rows() != y.attributes.rows() ||
          x.attributes.cols() != y.attributes.cols())
        return false;
      if (x.attributes != y.attributes) return false;
      if ((x.availability != y.availability).any()) return false;
      if (x.log_path_size.size() != y.log_path_size.size() ||
          x.log_path_size != y.log_path_size)
        return false;
      if (x.context.size() != y.context.size() || x.context != y.context) return false;
    }
  }
  return true;
}

std::vector<OccasionRef> flatten_occasions(const ChoiceDataset& data) {
  std::vector<OccasionRef> refs;
  refs.reserve(static_cast<std::size_t>(data.n_occasions()));
  for (int n = 0; n < static_cast<int>(data.individuals.size()); ++n) {
    const auto& ind = data.individuals[n];
    for (int t = 0; t < static_cast<int>(ind.occasions.size()); ++t) {
      refs.push_back({n, t, static_cast<Eigen::Index>(ind.occasions.size()),
                      &ind.occasions[t]});
    }
  }
  return refs;
}

bool is_correlation_matrix(const Mat& psi, double tol) {
  if (psi.rows() != psi.cols()) return false;
  for (Eigen::Index i = 0; i < psi.rows(); ++i) {
    if (std::abs(psi(i, i) - 1.0) > tol) return false;
    for (Eigen::Index j = 0; j < i; ++j) {
      if (std::abs(psi(i, j) - psi(j, i)) > tol) return false;
    }
  }
  Eigen::LLT<Mat> llt(psi);
  return llt.info() == Eigen::Success;
}

void PopulationParams::validate() const {
  const Eigen::Index K = zeta.size();
  if (tau.size() != K) throw ValidationError("tau length does not match zeta");
  for (Eigen::Index k = 0; k < K; ++k) {
    if (!(tau(k) > 0.0))
      throw ValidationError("tau entry " + std::to_string(k) + " is not strictly positive");
  }
  if (psi.rows() != K || psi.cols() != K)
    throw ValidationError("psi dimensions do not match zeta");
  if (K > 0 && !is_correlation_matrix(psi))
    throw ValidationError("psi is not a valid correlation matrix (Cholesky failed)");
}

}  // namespace cmmnl
