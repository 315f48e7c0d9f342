#pragma once

#include <cstdint>

#include "gmpd/model.hpp"

namespace gmpd::testing {

inline SystemInstance random_instance(Index k, Index m, double snr_db, std::uint64_t seed) {
  return SystemInstance(generate_channel(SystemDims(k, m), derive_seed(seed, kChannelStream)),
                        SourcePrior::homogeneous(k, 1.0), noise_var_from_snr_db(snr_db));
}

/// Relative L2 distance, ||a - b|| / ||b||.
inline double rel_error(const Vector& a, const Vector& b) { return (a - b).norm() / b.norm(); }

/// Dense inverse by full-pivot LU; deliberately a different factorization from the library.
inline Matrix dense_inverse(const Matrix& a) { return a.fullPivLu().inverse(); }

}  // namespace gmpd::testing
