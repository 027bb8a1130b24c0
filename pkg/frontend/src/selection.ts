import { ApiClient, PendingRoundError, StaleRoundError } from "./api.js";
import type { RecommendationRound, SelectionsEcho } from "./types.js";

export type SubmitState = "editing" | "submitting" | "submitted";

/**
 * Local selection state for one recommendation round.
 *
 * Toggles are local until submitted; a round can be submitted once, and a
 * race lost to another session surfaces as `stale`. Selections are never
 * dropped on a network failure: the round returns to `editing` with the
 * toggles intact so the operator can retry.
 */
export class SelectionRound {
  readonly round: RecommendationRound;
  private chosen = new Set<string>();
  private state: SubmitState = "editing";
  private lastEcho: SelectionsEcho | null = null;

  constructor(round: RecommendationRound) {
    this.round = round;
  }

  get submitState(): SubmitState {
    return this.state;
  }

  get echo(): SelectionsEcho | null {
    return this.lastEcho;
  }

  selected(): string[] {
    // recommendation order first, operator extras after
    const ordered = this.round.arcs
      .map((arc) => arc.origin_id)
      .filter((id) => this.chosen.has(id));
    const extras = [...this.chosen].filter(
      (id) => !this.round.arcs.some((arc) => arc.origin_id === id),
    );
    return [...ordered, ...extras.sort()];
  }

  isSelected(originId: string): boolean {
    return this.chosen.has(originId);
  }

  toggle(originId: string): boolean {
    if (this.state !== "editing") return this.chosen.has(originId);
    if (this.chosen.has(originId)) this.chosen.delete(originId);
    else this.chosen.add(originId);
    return this.chosen.has(originId);
  }

  /**
   * Submit once. Resolves with the server echo; rejects with
   * `StaleRoundError` when the round was already acknowledged elsewhere, or
   * rethrows network errors after restoring the editable state.
   */
  async submit(client: ApiClient): Promise<SelectionsEcho> {
    if (this.state === "submitted") {
      throw new Error("round already submitted");
    }
    if (this.state === "submitting") {
      throw new Error("submission already in flight");
    }
    this.state = "submitting";
    try {
      const echo = await client.postSelections(
        this.round.dest_id,
        this.round.t,
        this.selected(),
      );
      this.state = "submitted";
      this.lastEcho = echo;
      return echo;
    } catch (error) {
      if (error instanceof StaleRoundError) {
        this.state = "submitted"; // someone else acknowledged it
        throw error;
      }
      this.state = "editing"; // selections preserved for retry
      throw error;
    }
  }
}

export interface LoadResult {
  round: SelectionRound | null;
  pendingConflict: boolean;
}

/**
 * Fetch the next round for a destination. A 409 means a round is pending but
 * its seed is unknown to this session; the caller should prompt for a
 * refresh rather than fabricate state.
 */
export async function loadRound(
  client: ApiClient,
  destId: string,
  params: { k?: number; seed?: number } = {},
): Promise<LoadResult> {
  try {
    const round = await client.getRecommendations(destId, params);
    return { round: new SelectionRound(round), pendingConflict: false };
  } catch (error) {
    if (error instanceof PendingRoundError) {
      return { round: null, pendingConflict: true };
    }
    throw error;
  }
}

/** Count of updates the server attributed to operator selection. */
export function selectedDeltaCount(echo: SelectionsEcho): number {
  return echo.updates.filter((u) => u.delta_alpha === 1).length;
}
