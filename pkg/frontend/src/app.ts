import { ApiClient, ApiRequestError, StaleRoundError } from "./api.js";
import { loadRound, SelectionRound, selectedDeltaCount } from "./selection.js";
import { buildSeries, renderTrajectorySvg } from "./trajectory.js";
import { deltaRows, proximityGauge } from "./whatif.js";
import { renderMapSvg, type MapNode } from "./map.js";
import type { SelectionsEcho, StateView } from "./types.js";

interface AppElements {
  destSelect: HTMLSelectElement;
  kInput: HTMLInputElement;
  loadButton: HTMLButtonElement;
  roundMeta: HTMLElement;
  arcTable: HTMLTableSectionElement;
  submitButton: HTMLButtonElement;
  echoPanel: HTMLElement;
  banner: HTMLElement;
  trajectoryPanel: HTMLElement;
  mapPanel: HTMLElement;
  whatIfForm: HTMLFormElement;
  whatIfPanel: HTMLElement;
}

function el<T extends Element>(root: ParentNode, selector: string): T {
  const found = root.querySelector(selector);
  if (!found) throw new Error(`missing element ${selector}`);
  return found as T;
}

const fmt = (v: number | null | undefined, digits = 3): string =>
  v === null || v === undefined ? "–" : v.toFixed(digits);

export class ConsoleApp {
  private round: SelectionRound | null = null;
  private nodes: MapNode[] = [];
  private readonly elements: AppElements;

  constructor(
    private readonly client: ApiClient,
    root: ParentNode,
  ) {
    this.elements = {
      destSelect: el(root, "#dest"),
      kInput: el(root, "#k"),
      loadButton: el(root, "#load"),
      roundMeta: el(root, "#round-meta"),
      arcTable: el(root, "#arcs tbody"),
      submitButton: el(root, "#submit"),
      echoPanel: el(root, "#echo"),
      banner: el(root, "#banner"),
      trajectoryPanel: el(root, "#trajectory"),
      mapPanel: el(root, "#map"),
      whatIfForm: el(root, "#whatif-form"),
      whatIfPanel: el(root, "#whatif-result"),
    };
    this.elements.loadButton.addEventListener("click", () => void this.loadNextRound());
    this.elements.submitButton.addEventListener("click", () => void this.submit());
    this.elements.whatIfForm.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.runWhatIf();
    });
  }

  async start(): Promise<void> {
    const [state, nodes] = await Promise.all([
      this.client.getState(),
      this.client.getNodes().then((body) => body.nodes, () => []),
    ]);
    this.nodes = nodes;
    this.populateDestinations(state);
    await this.refreshTrajectory();
    this.renderMap();
  }

  private populateDestinations(state: StateView): void {
    this.elements.destSelect.innerHTML = "";
    for (const dest of state.dests) {
      const option = document.createElement("option");
      option.value = dest.dest_id;
      option.textContent = dest.dest_id;
      this.elements.destSelect.appendChild(option);
    }
  }

  private get destId(): string {
    return this.elements.destSelect.value;
  }

  private banner(text: string, kind: "info" | "error" | "" = ""): void {
    this.elements.banner.textContent = text;
    this.elements.banner.dataset.kind = kind;
  }

  async loadNextRound(): Promise<void> {
    this.banner("");
    const kRaw = this.elements.kInput.value.trim();
    const params = kRaw === "" ? {} : { k: Number(kRaw) };
    try {
      const result = await loadRound(this.client, this.destId, params);
      if (result.pendingConflict) {
        this.banner(
          "a round is already pending for this destination; submit or refresh it first",
          "error",
        );
        return;
      }
      this.round = result.round;
      this.renderRound();
    } catch (error) {
      this.banner(`could not load recommendations: ${String(error)}`, "error");
    }
  }

  private renderRound(): void {
    const round = this.round;
    const tbody = this.elements.arcTable;
    tbody.innerHTML = "";
    this.elements.echoPanel.textContent = "";
    if (!round) {
      this.elements.roundMeta.textContent = "no round loaded";
      return;
    }
    const r = round.round;
    this.elements.roundMeta.textContent =
      `round ${r.t} for ${r.dest_id} (k=${r.k}, seed=${r.seed}` +
      (r.bootstrap ? ", bootstrap from ranks)" : ")");
    for (const arc of r.arcs) {
      const row = document.createElement("tr");
      const cells = [
        `<td><input type="checkbox" data-origin="${arc.origin_id}"></td>`,
        `<td>${arc.origin_id}</td>`,
        `<td>${fmt(arc.rankpct)}</td>`,
        `<td>${fmt(arc.theta_hat)}</td>`,
        `<td>${fmt(arc.theta_tilde)}</td>`,
        `<td>${fmt(arc.posterior_mean)}</td>`,
        `<td>${fmt(arc.distance, 1)}</td>`,
        `<td>${fmt(arc.predicted_cost, 2)}</td>`,
      ];
      row.innerHTML = cells.join("");
      const checkbox = el<HTMLInputElement>(row, "input");
      checkbox.addEventListener("change", () => {
        round.toggle(arc.origin_id);
        this.renderMap();
      });
      tbody.appendChild(row);
    }
    this.renderMap();
  }

  async submit(): Promise<void> {
    const round = this.round;
    if (!round) {
      this.banner("load a round first", "error");
      return;
    }
    if (round.submitState !== "editing") {
      this.banner("this round was already submitted", "error");
      return;
    }
    try {
      const echo = await round.submit(this.client);
      this.renderEcho(echo);
      await this.refreshTrajectory();
    } catch (error) {
      if (error instanceof StaleRoundError) {
        this.banner("round was acknowledged elsewhere; load a fresh one", "error");
      } else if (error instanceof ApiRequestError) {
        this.banner(`server rejected the submission: ${error.message}`, "error");
      } else {
        this.banner("network failure; selections kept, try submitting again", "error");
      }
    }
  }

  private renderEcho(echo: SelectionsEcho): void {
    const chosen = selectedDeltaCount(echo);
    const lines = echo.updates.map(
      (u) =>
        `${u.origin_id}: Δα=${u.delta_alpha} Δβ=${u.delta_beta} → α=${u.alpha.toFixed(1)} β=${u.beta.toFixed(1)}`,
    );
    this.elements.echoPanel.textContent =
      `applied round ${echo.t} (${chosen} selected)\n` + lines.join("\n");
    this.banner(`round ${echo.t} submitted`, "info");
  }

  async refreshTrajectory(): Promise<void> {
    try {
      const history = await this.client.getHistory(this.destId);
      const series = buildSeries(history);
      this.elements.trajectoryPanel.innerHTML =
        series.length === 0 || history.rounds.length === 0
          ? "<p>no rounds applied yet</p>"
          : renderTrajectorySvg(series.slice(0, 6));
    } catch {
      this.elements.trajectoryPanel.innerHTML = "<p>history unavailable</p>";
    }
  }

  private renderMap(): void {
    if (this.nodes.length === 0) {
      this.elements.mapPanel.innerHTML = "<p>no geography loaded</p>";
      return;
    }
    const arcs =
      this.round?.round.arcs.map((arc) => ({
        from: arc.origin_id,
        to: this.destId,
        selected: this.round?.isSelected(arc.origin_id) ?? false,
      })) ?? [];
    this.elements.mapPanel.innerHTML = renderMapSvg(this.nodes, arcs);
  }

  async runWhatIf(): Promise<void> {
    const form = this.elements.whatIfForm;
    const value = (name: string): number =>
      Number((el<HTMLInputElement>(form, `[name=${name}]`)).value);
    try {
      const response = await this.client.whatIfHub({
        lat: value("lat"),
        lon: value("lon"),
        fraction: value("fraction"),
        seed: value("seed"),
        dest_id: this.destId,
      });
      const rows = deltaRows(response)
        .map(
          (row) =>
            `<tr><td>${row.direction}</td><td>${row.baseline.toFixed(1)}</td>` +
            `<td>${row.hub.toFixed(1)}</td><td>${row.change.toFixed(1)}</td></tr>`,
        )
        .join("");
      const gauge = proximityGauge(response, this.nodes.filter((n) => n.kind === "origin").length);
      this.elements.whatIfPanel.innerHTML =
        `<table><thead><tr><th>direction</th><th>baseline</th><th>with hub</th><th>change</th></tr></thead>` +
        `<tbody>${rows}</tbody></table>` +
        `<p>${gauge.label}` +
        (gauge.includedShare === null
          ? ""
          : `; recommended in ${(gauge.includedShare * 100).toFixed(0)}% of runs`) +
        `</p>`;
    } catch (error) {
      this.elements.whatIfPanel.innerHTML = `<p>what-if failed: ${String(error)}</p>`;
    }
  }
}

