#pragma once

#include "dlsim/engine.hpp"
#include "dlsim/ids.hpp"
#include "dlsim/network.hpp"
#include "dlsim/params.hpp"
#include "dlsim/prediction.hpp"
#include "dlsim/routing.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dlsim {

  enum class Strategy : std::uint8_t { DRP, PRP, Proposed };

  /// Accepts "drp", "prp", "proposed" (case-insensitive). Throws std::invalid_argument otherwise.
  Strategy parse_strategy(std::string_view tag);
  std::string_view to_string(Strategy strategy);

  struct LaneAction {
    VehicleId vehicle;
    SegmentRef from;
    int direction{0};  // -1 Right -> Left, +1 Left -> Right
    bool forced{false};
    LaneChangeKind kind{LaneChangeKind::Utility};
    double utility{0.};
    double u1{0.};
    double u2{0.};
    double u3{0.};
  };

  struct SegmentWinner {
    SegmentRef segment;
    VehicleId vehicle;
    double utility{0.};
    bool fired{false};
  };

  struct RerouteAssignment {
    VehicleId vehicle;
    Route route;
  };

  struct ControlDecision {
    /// Forced exits first, then utility or myopic moves; at most one entry per vehicle.
    std::vector<LaneAction> actions;
    std::vector<SegmentWinner> winners;
    std::vector<RerouteAssignment> reroutes;
    /// Warned segments whose conflict set was exhausted without clearing the thresholds.
    std::vector<SegmentRef> unresolved;
    /// Conflicting CAVs for which no alternative route existed.
    std::vector<VehicleId> unroutable;

    /// a_i(t) for the vehicle, 0 when no action.
    int action_for(VehicleId id) const;
  };

  struct Candidate {
    VehicleId vehicle;
    int direction{0};
  };

  struct CandidateSet {
    SegmentRef segment;
    std::vector<Candidate> members;  // ordered by vehicle id
  };

  struct ProtectionResult {
    std::vector<SegmentRef> warned;
    std::vector<LaneAction> forced;                         // one per overlapping occupant
    std::vector<std::pair<VehicleId, SegmentRef>> bans;     // sorted

    bool banned(VehicleId id, SegmentRef s) const;
    bool warning(SegmentRef s) const;
  };

  /// t_{b,s} > (1 + lambda) t0, strict.
  bool bus_warning(double busTime, double freeFlowTime, double lambda);
  bool bus_warning(SegmentRef s, PredictionSnapshot const& snapshot, double lambda);

  ProtectionResult protection_actions(World const& world, PredictionSnapshot const& snapshot, ControlParams const& params);

  /// CAVs on `s` whose cross-lane move is admissible: not forced out, not banned, and never a
  /// dedicated-lane entry for a CAV whose arrival overlaps a bus window on the target.
  CandidateSet build_candidates(World const& world,
                                SegmentRef s,
                                PredictionSnapshot const& snapshot,
                                ProtectionResult const& protection);

  /// (t_s - t_s') / t0(s)
  double u1_time_benefit(double ts, double tsAdjacent, double t0);
  double u1_time_benefit(SegmentRef s, PredictionSnapshot const& snapshot);
  /// 1 when the vehicle can still reach its next route edge after moving into `target`.
  int u2_feasibility(NetworkModel const& net, VehicleState const& v, Lane target);
  /// -n / (T / dt) where n counts entries of `log` in (t - T, t].
  double u3_rate_penalty(std::span<double const> log, double t, double horizon, double dt);
  double utility(double u1, double u2, double u3, ControlParams const& params);

  struct ScoredCandidate {
    VehicleId vehicle;
    double utility{0.};
  };

  struct Selection {
    std::optional<VehicleId> winner;
    double utility{0.};
    bool fired{false};
  };

  /// Argmax with ties to the lowest id; fires only on a strictly positive score.
  Selection select_winner(std::span<ScoredCandidate const> scored);

  ControlDecision select_lane_changes(World const& world,
                                      PredictionSnapshot const& snapshot,
                                      ProtectionResult const& protection,
                                      ControlParams const& params);

  struct EscalationResult {
    std::vector<RerouteAssignment> assignments;
    std::vector<SegmentRef> unresolved;
    std::vector<VehicleId> unroutable;
  };

  /// Greedy removal of conflicting CAVs from warned dedicated-lane segments. With `gplGate` the
  /// adjacent general lane must also exceed its tolerance for escalation to start and must clear
  /// for it to stop.
  EscalationResult rerouting_escalation(World const& world,
                                        PredictionSnapshot const& snapshot,
                                        ControlParams const& params,
                                        bool gplGate = true);

  /// Per-edge cost from current engine speeds: for each half, the fastest permitted lane.
  CostView instantaneous_costs(World const& world, VehicleClass cls);

  ControlDecision strategy_step(Strategy strategy,
                                World const& world,
                                PredictionSnapshot const& snapshot,
                                ProtectionResult const& protection,
                                ControlParams const& params);

  /// Highest current speed on the upstream segment; ties prefer onward-connecting lanes, then Left.
  class MyopicEntryPolicy : public LanePolicy {
  public:
    Lane choose_entry_lane(World const& world,
                           VehicleState const& vehicle,
                           EdgeId edge,
                           std::optional<EdgeId> following,
                           LaneSet candidates) const override;
  };

  /// Smallest predicted traversal time on the upstream segment; onward-connecting lanes first.
  class PredictiveEntryPolicy : public LanePolicy {
  public:
    explicit PredictiveEntryPolicy(PredictionSnapshot const* snapshot) : m_snapshot{snapshot} {}

    Lane choose_entry_lane(World const& world,
                           VehicleState const& vehicle,
                           EdgeId edge,
                           std::optional<EdgeId> following,
                           LaneSet candidates) const override;

  private:
    PredictionSnapshot const* m_snapshot;
  };

}  // namespace dlsim
