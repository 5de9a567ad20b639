#pragma once

#include <span>
#include <vector>

#include "seqfwm/grid.hpp"

namespace seqfwm {

/// Discretised optical spectrum.
///
/// psd holds power (or, for a single-shot envelope, energy) per frequency bin;
/// resolution is the equivalent noise bandwidth of one bin in rad/s.
struct SpectrumRecord {
  std::vector<double> frequencies;  // rad/s, strictly increasing
  std::vector<double> psd;
  double resolution = 0.0;

  /// Throws DomainError on size mismatch, negative psd, or non-increasing axis.
  void validate() const;
  std::size_t size() const noexcept { return frequencies.size(); }
  double total() const;
  SpectrumRecord scaled(double factor) const;
};

/// Periodogram of an envelope: psd_k = |X_k|^2 dt / N so the bin sum equals
/// field_energy. Bins are sorted by absolute frequency (carrier + offset).
SpectrumRecord to_spectrum(const FieldEnvelope& field);

/// Join records that cover disjoint frequency ranges into one record.
/// The resolution of the first record is kept.
SpectrumRecord concatenate(std::span<const SpectrumRecord> parts);

/// Bin-wise sum of two records sharing the same frequency axis.
SpectrumRecord add(const SpectrumRecord& a, const SpectrumRecord& b);

}  // namespace seqfwm
