#include "reconet/cost_model.hpp"

#include <stdexcept>

namespace reconet {

namespace {

using u64 = std::uint64_t;

void check_dims(int channels, int height, int width, int rank, const char* where) {
  if (channels < 1 || height < 1 || width < 1 || rank < 0)
    throw std::invalid_argument(std::string(where) +
                                ": dims must be positive and rank nonnegative");
}

u64 finalize(CostReport& report) {
  u64 total = 0;
  for (const auto& term : report.term_breakdown) total += term.macs;
  report.mac_count = total;
  return total;
}

CostReport reference_row(const std::string& method, u64 macs, u64 bytes) {
  CostReport r;
  r.method = method;
  r.mac_count = macs;
  r.memory_bytes = bytes;
  r.is_reference = true;
  return r;
}

}  // namespace

CostReport tgm_cost(int channels, int height, int width, int rank) {
  check_dims(channels, height, width, rank, "tgm_cost");
  const u64 c = static_cast<u64>(channels);
  const u64 h = static_cast<u64>(height);
  const u64 w = static_cast<u64>(width);
  const u64 r = static_cast<u64>(rank);
  CostReport report;
  report.method = "TGM+TRM";
  report.term_breakdown = {
      {"channel maps r*C^2", r * c * c},
      {"height collapse r*C*H", r * c * h},
      {"width collapse r*C*W", r * c * w},
  };
  finalize(report);
  report.memory_bytes = 4 * (c * h * w + r * (c + h + w));
  return report;
}

CostReport reconstruction_cost(int channels, int height, int width, int rank) {
  check_dims(channels, height, width, rank, "reconstruction_cost");
  const u64 c = static_cast<u64>(channels);
  const u64 h = static_cast<u64>(height);
  const u64 w = static_cast<u64>(width);
  const u64 r = static_cast<u64>(rank);
  CostReport report;
  report.method = "reconstruction";
  report.term_breakdown = {{"rank-term accumulation r*C*H*W", r * c * h * w}};
  finalize(report);
  report.memory_bytes = 4 * c * h * w;
  return report;
}

CostReport nonlocal_cost(int channels, int height, int width) {
  check_dims(channels, height, width, 0, "nonlocal_cost");
  const u64 c = static_cast<u64>(channels);
  const u64 hw = static_cast<u64>(height) * static_cast<u64>(width);
  CostReport report;
  report.method = "Non-Local";
  report.term_breakdown = {
      {"similarity + aggregation 2*(HW)^2*C", 2 * hw * hw * c},
      {"embedding convolutions 3*HW*C^2", 3 * hw * c * c},
  };
  finalize(report);
  report.memory_bytes = 4 * (hw * hw + 3 * c * hw);
  return report;
}

CostComparison compare(int channels, int height, int width, int rank) {
  CostComparison cmp;
  cmp.rows.push_back(tgm_cost(channels, height, width, rank));
  cmp.rows.push_back(reconstruction_cost(channels, height, width, rank));
  cmp.rows.push_back(nonlocal_cost(channels, height, width));
  cmp.rows.push_back(reference_row("APCNet", 8980000000ULL, 193100000ULL));
  cmp.rows.push_back(reference_row("RCCA", 5370000000ULL, 41330000ULL));
  cmp.rows.push_back(reference_row("A2Net", 4300000000ULL, 25000000ULL));
  cmp.rows.push_back(reference_row("AFNB", 2620000000ULL, 25930000ULL));
  cmp.rows.push_back(reference_row("LatentGNN", 2580000000ULL, 44690000ULL));
  cmp.rows.push_back(reference_row("EMAUnit", 2420000000ULL, 24120000ULL));
  const u64 tgm = cmp.rows[0].mac_count;
  const u64 nonlocal = cmp.rows[2].mac_count;
  cmp.nonlocal_over_tgm =
      tgm == 0 ? 0.0 : static_cast<double>(nonlocal) / static_cast<double>(tgm);
  return cmp;
}

}  // namespace reconet
