#include "swarmloc/pipeline.hpp"

namespace swarmloc {

PipelineResult localize_swarm(const RangeMatrix& ranges, const PipelineConfig& config) {
  PipelineResult out;
  out.clustering = spectral_cluster(ranges, config.clustering);
  if (!config.clustering.k_fixed) {
    out.clustering.clusters = merge_underdetermined(std::move(out.clustering.clusters), ranges,
                                                    config.completion.rank, config.completion_margin);
  }
  out.plan = plan_merges(out.clustering.clusters, ranges);
  out.local_maps.reserve(out.plan.augmented.size());
  for (const Cluster& members : out.plan.augmented) {
    out.local_maps.push_back(localize_cluster(members, ranges, config.completion));
  }
  out.map = merge_all(out.local_maps, out.plan, ranges);
  return out;
}

}  // namespace swarmloc
