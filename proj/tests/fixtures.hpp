#pragma once

#include <memory>

#include "tdpot/cch.hpp"
#include "tdpot/instance_gen.hpp"
#include "tdpot/traffic.hpp"

namespace fixture {

struct Instance {
  tdpot::GenConfig cfg;
  tdpot::Network net;
  tdpot::TravelTimeFunctions p;
  std::shared_ptr<const tdpot::LiveOverlay> overlay;
  tdpot::CchTopology topo;
};

/// Generated grid with live incidents. A large spacing stretches queries over
/// several hours so that many intervals and buckets come into play.
inline Instance make(std::uint32_t width, double spacing_m, std::uint32_t incidents, std::uint64_t seed = 3,
                     double blocked = 0.1) {
  Instance in;
  in.cfg.seed = seed;
  in.cfg.width = in.cfg.height = width;
  in.cfg.spacing_m = spacing_m;
  in.cfg.highway_every = 8;
  in.cfg.highway_span = 2;
  in.cfg.td_fraction = 0.6;
  in.cfg.incidents = incidents;
  in.cfg.blocked_fraction = blocked;
  in.net = tdpot::gen_network(in.cfg);
  in.p = tdpot::gen_predictions(in.cfg, in.net);
  auto snapshot = tdpot::gen_live(in.cfg, in.net.graph, in.p);
  in.overlay = std::make_shared<tdpot::LiveOverlay>(in.p, snapshot.tau_now, snapshot.entries);
  in.topo = tdpot::CchTopology::contract(in.net.graph, tdpot::compute_order(in.net.graph));
  return in;
}

}  // namespace fixture
