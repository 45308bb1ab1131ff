// Peak-RSS check for streaming over a 10^6-row synthetic source.

#include <sys/resource.h>

#include <cstdio>
#include <ostream>
#include <streambuf>

#include "bitbit/stream.hpp"

namespace {

class NullBuffer : public std::streambuf {
 protected:
  int overflow(int c) override { return c == traits_type::eof() ? 0 : c; }
  std::streamsize xsputn(const char*, std::streamsize n) override { return n; }
};

long peak_rss_kib() {
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  return usage.ru_maxrss;
}

}  // namespace

int main() {
  constexpr std::size_t kRows = 1000000;
  constexpr std::size_t kFeatures = 8;
  constexpr std::size_t kBatch = 10000;
  // Holding the whole source would take 64 MiB of features alone.
  constexpr long kBudgetKib = 48 * 1024;

  const long before = peak_rss_kib();
  bitbit::SyntheticSource source(kRows, kFeatures, 4, 1.0, 11, kBatch);
  bitbit::StreamOptions options;
  options.reservoir_size = 100000;
  const auto basis = bitbit::stream_fit_basis(source, {bitbit::Scheme::kPca, 0}, options);
  const auto model = bitbit::with_budget(basis, 24);

  NullBuffer buffer;
  std::ostream sink(&buffer);
  const std::size_t written = bitbit::stream_encode(model, source, sink);
  const long delta = peak_rss_kib() - before;

  std::printf("records=%zu peak_rss_delta_kib=%ld budget_kib=%ld\n", written, delta, kBudgetKib);
  if (written != kRows) {
    std::printf("FAIL: wrong record count\n");
    return 1;
  }
  if (delta > kBudgetKib) {
    std::printf("FAIL: peak memory above budget\n");
    return 1;
  }
  std::printf("PASS\n");
  return 0;
}
