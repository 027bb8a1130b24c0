// Wire formats of the /v1 JSON API. Field names mirror the server exactly.

export interface RecommendedArc {
  origin_id: string;
  theta_hat: number | null; // null on a bootstrap round (ranked, not sampled)
  theta_tilde: number;
  rankpct: number;
  posterior_mean: number;
  distance: number | null;
  predicted_cost: number | null;
}

export interface RecommendationRound {
  dest_id: string;
  t: number;
  k: number;
  seed: number;
  bootstrap: boolean;
  mode: string;
  arcs: RecommendedArc[];
}

export interface PosteriorUpdate {
  origin_id: string;
  delta_alpha: number;
  delta_beta: number;
  alpha: number;
  beta: number;
}

export interface SelectionsEcho {
  dest_id: string;
  t: number;
  mode: string;
  updates: PosteriorUpdate[];
}

export interface HistoryPoint {
  t: number;
  rankpct: number;
  posterior_mean: number;
  theta_tilde: number;
}

export interface HistoryRound {
  t: number;
  seed: number;
  k: number;
  bootstrap: boolean;
  recommended: string[];
  selected: string[];
}

export interface History {
  dest_id: string;
  rounds: HistoryRound[];
  series: Record<string, HistoryPoint[]>;
}

export type DirectionDeltas = Record<string, number>;

export interface WhatIfProximity {
  new_origin_id: string;
  dest_id: string;
  copied_from: string;
  initial_alpha: number;
  initial_beta: number;
  rankpct: number;
  predicted_cost: number;
  episodes: number;
  best_positions: number[];
  inclusion_frequency: number | null;
}

export interface WhatIfResponse {
  fraction: number;
  modified_rows: number;
  truncated: boolean;
  baseline_deltas: DirectionDeltas;
  hub_deltas: DirectionDeltas;
  proximity: WhatIfProximity;
}

export interface GeoNodeView {
  id: string;
  lat: number;
  lon: number;
  kind: "origin" | "destination";
}

export interface StateArc {
  origin_id: string;
  alpha: number;
  beta: number;
  rankpct: number;
}

export interface StateDest {
  dest_id: string;
  rounds_applied: number;
  arcs: StateArc[];
}

export interface StateView {
  version: number;
  t: number;
  alpha0: number;
  beta0: number;
  dests: StateDest[];
}
