#include "discbench/truncation.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "discbench/errors.hpp"
#include "discbench/parallel.hpp"
#include "discbench/rng.hpp"

namespace discbench {

NormHistogram estimate_norm_histogram(const KomlosMatrix& m, int samples,
                                      int bins, std::uint64_t seed,
                                      double cap_mult, int workers) {
  if (samples < 1000) throw ConfigError("histogram needs at least 1000 samples");
  if (bins < 2) throw ConfigError("histogram needs at least 2 bins");
  if (!(cap_mult > 0.0)) throw ConfigError("histogram cap must be positive");

  NormHistogram h;
  h.lo = 0.0;
  h.hi = cap_mult * std::sqrt(static_cast<double>(m.d()));
  h.counts.assign(bins, 0);
  h.total = samples;

  // One walk per job on its own derived stream; each job owns one slot, so the
  // result is independent of the worker count.
  std::vector<double> norms(samples);
  parallel_jobs(samples, workers, [&](std::int64_t i) {
    const StackedSample s =
        sample_stacked(m, derive_seed(seed, static_cast<std::uint64_t>(i)));
    norms[i] = s.disc.norm();
  });

  const double width = h.bin_width();
  for (double v : norms) {
    if (v >= h.hi) {
      ++h.overflow;
      continue;
    }
    int b = static_cast<int>(v / width);
    if (b >= bins) b = bins - 1;  // guard against v just under hi rounding up
    ++h.counts[b];
  }
  return h;
}

TruncationWindow select_annulus(const NormHistogram& h) {
  if (h.total <= 0 || h.counts.empty()) {
    throw ConfigError("cannot select a window from an empty histogram");
  }
  std::size_t best = 0;
  for (std::size_t b = 1; b < h.counts.size(); ++b) {
    if (h.counts[b] > h.counts[best]) best = b;  // ties keep the smaller radius
  }
  const double width = h.bin_width();
  TruncationWindow w;
  w.r = h.lo + width * static_cast<double>(best);
  w.width = width;
  w.mass = static_cast<double>(h.counts[best]) / static_cast<double>(h.total);
  w.histogram_samples = h.total;
  if (w.mass <= 0.0) {
    throw ConfigError("selected window has zero estimated mass");
  }
  return w;
}

TruncatedSample sample_truncated(const KomlosMatrix& m,
                                 const TruncationWindow& w, std::uint64_t seed,
                                 int max_tries) {
  if (max_tries < 1) throw ConfigError("max_tries must be at least 1");
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    StackedSample s =
        sample_stacked(m, derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    const double norm = s.disc.norm();
    if (norm >= w.r && norm < w.r + w.width) {
      TruncatedSample out;
      out.coloring = std::move(s.coloring);
      out.disc = std::move(s.disc);
      out.norm = norm;
      out.tries = attempt + 1;
      return out;
    }
  }
  std::ostringstream msg;
  msg << "no draw landed in [" << w.r << ", " << w.r + w.width << ") after "
      << max_tries << " attempts";
  throw TruncationError(msg.str(), max_tries);
}

nlohmann::json window_to_json(const TruncationWindow& w) {
  return nlohmann::json{{"r", w.r},
                        {"width", w.width},
                        {"mass", w.mass},
                        {"samples", w.histogram_samples}};
}

TruncationWindow window_from_json(const nlohmann::json& j) {
  TruncationWindow w;
  try {
    w.r = j.at("r").get<double>();
    w.width = j.at("width").get<double>();
    w.mass = j.at("mass").get<double>();
    w.histogram_samples = j.at("samples").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad window JSON: ") + e.what());
  }
  if (!(w.r >= 0.0) || !(w.width > 0.0) || !(w.mass > 0.0) || w.mass > 1.0) {
    throw ValidationError("window JSON out of range");
  }
  return w;
}

}  // namespace discbench
