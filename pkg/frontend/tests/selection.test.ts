import { describe, expect, it } from "vitest";

import { ApiClient, type FetchLike } from "../src/api.js";
import { loadRound, SelectionRound, selectedDeltaCount } from "../src/selection.js";
import type { RecommendationRound, SelectionsEcho } from "../src/types.js";

const ROUND: RecommendationRound = {
  dest_id: "D_0",
  t: 2,
  k: 3,
  seed: 11,
  bootstrap: false,
  mode: "not_selected",
  arcs: [
    { origin_id: "FC_2", theta_hat: 0.9, theta_tilde: 0.8, rankpct: 0.9, posterior_mean: 0.1, distance: 10, predicted_cost: 2.0 },
    { origin_id: "FC_0", theta_hat: 0.7, theta_tilde: 0.6, rankpct: 0.8, posterior_mean: 0.1, distance: 12, predicted_cost: 2.2 },
    { origin_id: "FC_1", theta_hat: 0.4, theta_tilde: 0.3, rankpct: 0.7, posterior_mean: 0.1, distance: 14, predicted_cost: 2.4 },
  ],
};

function echoFor(selected: string[]): SelectionsEcho {
  const updates = ROUND.arcs.map((arc) => ({
    origin_id: arc.origin_id,
    delta_alpha: selected.includes(arc.origin_id) ? 1 : 0,
    delta_beta: selected.includes(arc.origin_id) ? 0 : 1,
    alpha: 1.1,
    beta: 2.0,
  }));
  return { dest_id: "D_0", t: 2, mode: "not_selected", updates };
}

function clientWith(handler: FetchLike): ApiClient {
  return new ApiClient({ baseUrl: "http://svc", fetchImpl: handler });
}

describe("SelectionRound", () => {
  it("toggles selections locally in recommendation order", () => {
    const round = new SelectionRound(ROUND);
    round.toggle("FC_1");
    round.toggle("FC_2");
    expect(round.selected()).toEqual(["FC_2", "FC_1"]);
    round.toggle("FC_1");
    expect(round.selected()).toEqual(["FC_2"]);
  });

  it("submits once and refuses a second submission", async () => {
    let posts = 0;
    const client = clientWith((url, init) => {
      if (init?.method === "POST") posts += 1;
      return Promise.resolve({
        ok: true,
        status: 200,
        json: () => Promise.resolve(echoFor(["FC_2"])),
      } as unknown as Response);
    });
    const round = new SelectionRound(ROUND);
    round.toggle("FC_2");
    const echo = await round.submit(client);
    expect(selectedDeltaCount(echo)).toBe(1);
    expect(round.submitState).toBe("submitted");
    await expect(round.submit(client)).rejects.toThrow("already submitted");
    expect(posts).toBe(1);
  });

  it("surfaces a raced 409 as submitted elsewhere", async () => {
    const client = clientWith(() =>
      Promise.resolve({
        ok: false,
        status: 409,
        json: () => Promise.resolve({ code: "stale_round", message: "raced" }),
      } as unknown as Response),
    );
    const round = new SelectionRound(ROUND);
    await expect(round.submit(client)).rejects.toThrow("raced");
    expect(round.submitState).toBe("submitted");
  });

  it("keeps selections editable after a network failure", async () => {
    const client = clientWith(() => Promise.reject(new Error("connection reset")));
    const round = new SelectionRound(ROUND);
    round.toggle("FC_0");
    await expect(round.submit(client)).rejects.toThrow("connection reset");
    expect(round.submitState).toBe("editing");
    expect(round.selected()).toEqual(["FC_0"]);
  });
});

describe("loadRound", () => {
  it("wraps a fresh round", async () => {
    const client = clientWith(() =>
      Promise.resolve({
        ok: true,
        status: 200,
        json: () => Promise.resolve(ROUND),
      } as unknown as Response),
    );
    const result = await loadRound(client, "D_0", { k: 3, seed: 11 });
    expect(result.pendingConflict).toBe(false);
    expect(result.round?.round.t).toBe(2);
  });

  it("flags a pending conflict instead of fabricating a round", async () => {
    const client = clientWith(() =>
      Promise.resolve({
        ok: false,
        status: 409,
        json: () => Promise.resolve({ code: "pending_round", message: "busy" }),
      } as unknown as Response),
    );
    const result = await loadRound(client, "D_0");
    expect(result.round).toBeNull();
    expect(result.pendingConflict).toBe(true);
  });
});
