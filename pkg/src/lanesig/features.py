"""Feature engineering for origin-destination arcs.

Six feature layouts are supported, all anchored on the log lane distance:

* ``null``: log distance only.
* ``a``: log distance plus the raw masked-DFT coefficient components of the
  origin-vs-FCs, origin-vs-destinations and destination-vs-destinations
  signatures.
* ``b``: log distance plus the magnitude of each domain's (0, 0) coefficient.
* ``c``: log distance plus the four per-direction peak intensities of the
  origin-vs-destinations signature.
* ``d``: variant ``c`` plus the range bin of each peak.
* ``cost``: the lane-cost layout: week, direct flag, flow, raw distance,
  origin position, and the origin-vs-destinations peak pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .geometry import GeoNode, NodeKind, NodeSet, PolarGrid
from .spectra import CompressionSummary, Geosig, compression_summary, geosig, power

VARIANTS = ("null", "a", "b", "c", "d", "cost")

# floor for log-distance when a lane has zero recorded distance
LN_DISTANCE_EPS = 1e-6


class MissingSignatureError(KeyError):
    """A feature layout needs a signature table entry that is not present."""


@dataclass(frozen=True)
class ArcRecord:
    """One origin -> destination observation for one period."""

    week: int
    origin_id: str
    dest_id: str
    flow: float
    cost_per_pkg: float
    distance: float
    direct: int
    origin_lat: float
    origin_lon: float
    dest_lat: float
    dest_lon: float

    def __post_init__(self) -> None:
        if self.flow < 0:
            raise ValueError(f"arc {self.origin_id}->{self.dest_id}: flow must be >= 0")
        if self.cost_per_pkg < 0:
            raise ValueError(
                f"arc {self.origin_id}->{self.dest_id}: cost_per_pkg must be >= 0"
            )
        if self.distance < 0:
            raise ValueError(
                f"arc {self.origin_id}->{self.dest_id}: distance must be >= 0"
            )
        if self.direct not in (0, 1):
            raise ValueError(f"arc {self.origin_id}->{self.dest_id}: direct must be 0 or 1")


@dataclass(frozen=True)
class FeatureVector:
    variant: str
    values: np.ndarray
    names: tuple[str, ...]


@dataclass
class SignatureTable:
    """Per-node compression summaries and geosigs for one domain.

    The domain label follows the (viewpoint, target-set) convention: ``oO``
    is each origin against the FC set, ``oD`` each origin against the
    destination set, ``dD`` each destination against the destination set.
    """

    domain: str
    summaries: dict[str, CompressionSummary] = field(default_factory=dict)
    signatures: dict[str, Geosig] = field(default_factory=dict)


def ln_lane_distance(distance: float) -> float:
    """Natural log of the lane distance, guarded at zero."""
    if distance > 0:
        return math.log(distance)
    return math.log(LN_DISTANCE_EPS)


def euclid_degrees(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    return math.hypot(lat1 - lat2, lon1 - lon2)


def node_sets_from_arcs(arcs: list[ArcRecord]) -> tuple[NodeSet, NodeSet]:
    """Aggregate arcs into measured node sets.

    FC measures are total outbound flow, destination measures total inbound
    flow, summed across every week present in ``arcs``.
    """
    origin_pos: dict[str, tuple[float, float]] = {}
    dest_pos: dict[str, tuple[float, float]] = {}
    origin_flow: dict[str, float] = {}
    dest_flow: dict[str, float] = {}
    for arc in arcs:
        origin_pos.setdefault(arc.origin_id, (arc.origin_lat, arc.origin_lon))
        dest_pos.setdefault(arc.dest_id, (arc.dest_lat, arc.dest_lon))
        origin_flow[arc.origin_id] = origin_flow.get(arc.origin_id, 0.0) + arc.flow
        dest_flow[arc.dest_id] = dest_flow.get(arc.dest_id, 0.0) + arc.flow
    fc_set = NodeSet(
        tuple(
            GeoNode(nid, lat, lon, origin_flow[nid])
            for nid, (lat, lon) in sorted(origin_pos.items())
        ),
        NodeKind.FC,
    )
    dest_set = NodeSet(
        tuple(
            GeoNode(nid, lat, lon, dest_flow[nid])
            for nid, (lat, lon) in sorted(dest_pos.items())
        ),
        NodeKind.DESTINATION,
    )
    return fc_set, dest_set


def build_signature_tables(
    fc_set: NodeSet,
    dest_set: NodeSet,
    grid: PolarGrid,
    cs_mask: int = 1,
    sig_mask: int = 2,
) -> dict[str, SignatureTable]:
    """Compute the three domain tables used by the feature layouts."""
    tables = {
        "oO": SignatureTable("oO"),
        "oD": SignatureTable("oD"),
        "dD": SignatureTable("dD"),
    }
    for fc in fc_set:
        tables["oO"].summaries[fc.id] = compression_summary(fc, fc_set, grid, cs_mask)
        tables["oO"].signatures[fc.id] = geosig(fc, fc_set, grid, sig_mask)
        tables["oD"].summaries[fc.id] = compression_summary(fc, dest_set, grid, cs_mask)
        tables["oD"].signatures[fc.id] = geosig(fc, dest_set, grid, sig_mask)
    for dest in dest_set:
        tables["dD"].summaries[dest.id] = compression_summary(dest, dest_set, grid, cs_mask)
        tables["dD"].signatures[dest.id] = geosig(dest, dest_set, grid, sig_mask)
    return tables


def _coefficient(cs: CompressionSummary, i: int, j: int) -> tuple[float, float]:
    for row, col, re, im in cs.coefficients:
        if (row, col) == (i, j):
            return re, im
    raise MissingSignatureError(f"coefficient ({i}, {j}) not kept by mask {cs.mask_max}")


def _summary(tables: dict[str, SignatureTable], domain: str, node_id: str) -> CompressionSummary:
    table = tables.get(domain)
    if table is None or node_id not in table.summaries:
        raise MissingSignatureError(f"{domain} signature missing for node {node_id!r}")
    return table.summaries[node_id]


def _signature(tables: dict[str, SignatureTable], domain: str, node_id: str) -> Geosig:
    table = tables.get(domain)
    if table is None or node_id not in table.signatures:
        raise MissingSignatureError(f"{domain} signature missing for node {node_id!r}")
    return table.signatures[node_id]


# raw-coefficient components used by variant "a", in reporting order;
# R = real part, I = imaginary part at the given (row, col) index
_VARIANT_A_COMPONENTS = (
    ("dD", "I", 0, 1),
    ("dD", "I", 1, 0),
    ("dD", "R", 0, 0),
    ("dD", "R", 0, 1),
    ("dD", "R", 1, 0),
    ("oO", "I", 0, 1),
    ("oO", "I", 1, 0),
    ("oO", "R", 0, 1),
    ("oO", "R", 1, 0),
    ("oD", "I", 0, 1),
    ("oD", "I", 1, 0),
    ("oD", "R", 0, 1),
    ("oD", "R", 1, 0),
    ("oD", "R", 0, 0),
)


def max_pair_names(domain: str, theta_bins: int) -> list[str]:
    names = []
    for k in range(theta_bins):
        names += [f"{domain}_{k}r_summary_max", f"{domain}_{k}r_summary_max_r"]
    return names


def feature_names(variant: str, theta_bins: int = 4, extra_domains: tuple[str, ...] = ()) -> tuple[str, ...]:
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if variant == "null":
        names = ["ln_lld"]
    elif variant == "a":
        names = ["ln_lld"] + [
            f"{domain}{part}_{i}{j}" for domain, part, i, j in _VARIANT_A_COMPONENTS
        ]
    elif variant == "b":
        names = ["ln_lld", "oO_00", "oD_00", "dD_00"]
    elif variant == "c":
        names = ["ln_lld"] + [f"oD_{k}r_summary_max" for k in range(theta_bins)]
    elif variant == "d":
        names = ["ln_lld"] + max_pair_names("oD", theta_bins)
    else:  # cost
        names = ["t", "direct", "flow", "distance", "lat", "lon"] + max_pair_names(
            "oD", theta_bins
        )
    if variant in ("c", "d"):
        for domain in extra_domains:
            if domain not in ("oO", "dD"):
                raise ValueError(f"extra domain must be 'oO' or 'dD', got {domain!r}")
            if variant == "c":
                names += [f"{domain}_{k}r_summary_max" for k in range(theta_bins)]
            else:
                names += max_pair_names(domain, theta_bins)
    return tuple(names)


def _max_pair_values(sig: Geosig, pairs_only_max: bool) -> list[float]:
    out: list[float] = []
    for value, rbin in sig.pairs:
        out.append(value)
        if not pairs_only_max:
            out.append(float(rbin))
    return out


def build_features(
    arc: ArcRecord,
    tables: dict[str, SignatureTable],
    variant: str,
    extra_domains: tuple[str, ...] = (),
) -> FeatureVector:
    """Assemble one arc's feature vector for the given layout."""
    names = feature_names(variant, extra_domains=extra_domains) if variant in ("c", "d") else feature_names(variant)
    if variant == "null":
        values = [ln_lane_distance(arc.distance)]
    elif variant == "a":
        values = [ln_lane_distance(arc.distance)]
        for domain, part, i, j in _VARIANT_A_COMPONENTS:
            node_id = arc.dest_id if domain == "dD" else arc.origin_id
            re, im = _coefficient(_summary(tables, domain, node_id), i, j)
            values.append(re if part == "R" else im)
    elif variant == "b":
        values = [ln_lane_distance(arc.distance)]
        for domain in ("oO", "oD", "dD"):
            node_id = arc.dest_id if domain == "dD" else arc.origin_id
            re, im = _coefficient(_summary(tables, domain, node_id), 0, 0)
            values.append(power(re, im))
    elif variant == "c":
        sig = _signature(tables, "oD", arc.origin_id)
        values = [ln_lane_distance(arc.distance)] + _max_pair_values(sig, pairs_only_max=True)
        for domain in extra_domains:
            node_id = arc.dest_id if domain == "dD" else arc.origin_id
            values += _max_pair_values(_signature(tables, domain, node_id), pairs_only_max=True)
    elif variant == "d":
        sig = _signature(tables, "oD", arc.origin_id)
        values = [ln_lane_distance(arc.distance)] + _max_pair_values(sig, pairs_only_max=False)
        for domain in extra_domains:
            node_id = arc.dest_id if domain == "dD" else arc.origin_id
            values += _max_pair_values(_signature(tables, domain, node_id), pairs_only_max=False)
    elif variant == "cost":
        sig = _signature(tables, "oD", arc.origin_id)
        values = [
            float(arc.week),
            float(arc.direct),
            arc.flow,
            arc.distance,
            arc.origin_lat,
            arc.origin_lon,
        ] + _max_pair_values(sig, pairs_only_max=False)
    else:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    vector = np.asarray(values, dtype=float)
    if vector.shape != (len(names),):
        raise AssertionError(f"variant {variant}: built {vector.shape[0]} values for {len(names)} names")
    return FeatureVector(variant, vector, names)


@dataclass
class FlowDataset:
    """A design matrix together with the arcs it was built from."""

    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...]
    arcs: tuple[ArcRecord, ...]
    variant: str
    grid: PolarGrid

    def __len__(self) -> int:
        return len(self.arcs)


class GeosigFeaturizer(TransformerMixin, BaseEstimator):
    """Turns arc records into model feature rows.

    ``fit`` computes the signature tables from the training arcs (node
    measures are that period's flows); ``transform`` then maps any arcs onto
    the fitted tables. Re-fit on a new period to refresh the geography.
    """

    def __init__(
        self,
        variant: str = "d",
        theta_bins: int = 4,
        r_bins: int = 17,
        r_step: float = 100.0,
        r_unit: str = "miles",
        cs_mask: int = 1,
        sig_mask: int = 2,
        extra_domains: tuple[str, ...] = (),
    ):
        self.variant = variant
        self.theta_bins = theta_bins
        self.r_bins = r_bins
        self.r_step = r_step
        self.r_unit = r_unit
        self.cs_mask = cs_mask
        self.sig_mask = sig_mask
        self.extra_domains = extra_domains

    def _grid(self) -> PolarGrid:
        return PolarGrid(self.theta_bins, self.r_bins, self.r_step, self.r_unit)

    def fit(self, arcs: list[ArcRecord], y=None):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if not arcs:
            raise ValueError("cannot fit on an empty arc list")
        grid = self._grid()
        fc_set, dest_set = node_sets_from_arcs(list(arcs))
        self.fc_set_ = fc_set
        self.dest_set_ = dest_set
        self.tables_ = build_signature_tables(
            fc_set, dest_set, grid, self.cs_mask, self.sig_mask
        )
        self.feature_names_ = feature_names(
            self.variant, self.theta_bins, tuple(self.extra_domains)
        )
        return self

    def transform(self, arcs: list[ArcRecord]) -> np.ndarray:
        if not hasattr(self, "tables_"):
            raise ValueError("featurizer is not fitted")
        rows = [
            build_features(arc, self.tables_, self.variant, tuple(self.extra_domains)).values
            for arc in arcs
        ]
        if not rows:
            return np.empty((0, len(self.feature_names_)))
        return np.vstack(rows)

    def get_feature_names_out(self, input_features=None):
        return np.asarray(self.feature_names_, dtype=object)


def flow_targets(arcs: list[ArcRecord]) -> np.ndarray:
    return np.asarray([arc.flow for arc in arcs], dtype=float)


def cost_targets(arcs: list[ArcRecord]) -> np.ndarray:
    return np.asarray([arc.cost_per_pkg for arc in arcs], dtype=float)


def build_design(
    arcs: list[ArcRecord],
    tables: dict[str, SignatureTable],
    variant: str,
    grid: PolarGrid,
    target: str = "flow",
    extra_domains: tuple[str, ...] = (),
) -> FlowDataset:
    """Assemble a dataset for fitting or evaluation from prebuilt tables."""
    if target not in ("flow", "cost"):
        raise ValueError(f"target must be 'flow' or 'cost', got {target!r}")
    rows = [build_features(arc, tables, variant, extra_domains) for arc in arcs]
    names = rows[0].names if rows else feature_names(variant, grid.theta_bins, extra_domains)
    X = np.vstack([r.values for r in rows]) if rows else np.empty((0, len(names)))
    y = flow_targets(arcs) if target == "flow" else cost_targets(arcs)
    return FlowDataset(X, y, tuple(names), tuple(arcs), variant, grid)
