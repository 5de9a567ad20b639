#include "seqfwm/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "seqfwm/errors.hpp"
#include "seqfwm/fft.hpp"

namespace seqfwm {

void SpectrumRecord::validate() const {
  if (frequencies.size() != psd.size()) throw DomainError("spectrum axis and psd differ in length");
  if (frequencies.empty()) throw DomainError("spectrum is empty");
  for (std::size_t i = 0; i < psd.size(); ++i) {
    if (!(psd[i] >= 0.0)) throw DomainError("spectrum psd must be non-negative");
    if (i > 0 && !(frequencies[i] > frequencies[i - 1]))
      throw DomainError("spectrum frequencies must be strictly increasing");
  }
}

double SpectrumRecord::total() const { return std::accumulate(psd.begin(), psd.end(), 0.0); }

SpectrumRecord SpectrumRecord::scaled(double factor) const {
  SpectrumRecord out = *this;
  for (auto& p : out.psd) p *= factor;
  return out;
}

SpectrumRecord to_spectrum(const FieldEnvelope& field) {
  const auto& grid = field.grid();
  const std::size_t n = grid.n_points();
  FftWorkspace fft(n);
  auto buf = fft.data();
  const auto samples = field.samples();
  // The ifftshift puts t = 0 at index 0, so a pulse centred on the window has a flat spectral phase.
  for (std::size_t i = 0; i < n; ++i) buf[i] = samples[(i + n / 2) % n];
  fft.forward();

  SpectrumRecord rec;
  rec.frequencies.resize(n);
  rec.psd.resize(n);
  rec.resolution = grid.frequency_step();
  const double scale = grid.dt() / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t k = (j + n / 2) % n;  // fftshift
    rec.frequencies[j] = grid.carrier().angular() + grid.frequency_offset(k);
    rec.psd[j] = std::norm(buf[k]) * scale;
  }
  return rec;
}

SpectrumRecord concatenate(std::span<const SpectrumRecord> parts) {
  if (parts.empty()) throw DomainError("nothing to concatenate");
  std::vector<const SpectrumRecord*> order;
  for (const auto& p : parts) order.push_back(&p);
  std::sort(order.begin(), order.end(),
            [](const auto* a, const auto* b) { return a->frequencies.front() < b->frequencies.front(); });
  SpectrumRecord out;
  out.resolution = parts.front().resolution;
  for (const auto* p : order) {
    if (!out.frequencies.empty() && p->frequencies.front() <= out.frequencies.back())
      throw DomainError("spectra to concatenate overlap in frequency");
    out.frequencies.insert(out.frequencies.end(), p->frequencies.begin(), p->frequencies.end());
    out.psd.insert(out.psd.end(), p->psd.begin(), p->psd.end());
  }
  return out;
}

SpectrumRecord add(const SpectrumRecord& a, const SpectrumRecord& b) {
  if (a.frequencies != b.frequencies) throw DomainError("spectra to add must share a frequency axis");
  SpectrumRecord out = a;
  for (std::size_t i = 0; i < out.psd.size(); ++i) out.psd[i] += b.psd[i];
  return out;
}

}  // namespace seqfwm
