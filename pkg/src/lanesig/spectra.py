"""Frequency-domain compression of polar flow matrices.

A polar flow matrix is pushed through an unnormalized forward 2-D DFT, most
coefficients are zeroed with an index mask, and the inverse transform's
magnitude gives a smoothed flow image. Per-direction summaries of that image
(the row maximum paired with the range bin where it occurs) are the compact
"geosig" features consumed by the flow and cost models.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .geometry import GeoNode, NodeSet, PolarGrid, PolarMatrix, polar_matrix

SUMMARY_MODES = ("max", "first_nonzero", "first_above")

# Entries this far below a row's peak are treated as zero by the alternative
# summary modes; the transform itself is only accurate to float precision.
ZERO_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SpectrumMatrix:
    """Complex DFT coefficients of a polar matrix, same shape, DC at (0, 0)."""

    values: np.ndarray
    origin_id: str
    grid: PolarGrid

    def __post_init__(self) -> None:
        expected = (self.grid.theta_bins, self.grid.r_bins)
        if self.values.shape != expected:
            raise ValueError(f"values shape {self.values.shape} != grid shape {expected}")
        self.values.setflags(write=False)


@dataclass(frozen=True)
class CompressionSummary:
    """The DFT coefficients kept by a triangular index mask, flattened.

    ``coefficients`` lists ``(row, col, real, imag)`` for every kept entry in
    row-major order. ``flat`` is the vector of independent reals: the real and
    imaginary part of each kept entry, except the imaginary part of (0, 0),
    which is identically zero for real input. With ``mask_max=1`` that leaves
    five numbers.
    """

    mask_max: int
    coefficients: tuple[tuple[int, int, float, float], ...]
    flat: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class Geosig:
    """Per-direction (peak smoothed flow, range bin of the peak) pairs.

    ``pairs[k]`` summarizes direction row ``k`` of the smoothed flow image.
    The flat form interleaves values and bin indices, so the quadrant preset
    yields an 8-vector.
    """

    origin_id: str
    pairs: tuple[tuple[float, int], ...]
    grid: PolarGrid
    mask_max: int
    summary: str = "max"
    magnitude: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def flat(self) -> np.ndarray:
        out = np.empty(2 * len(self.pairs))
        for k, (value, rbin) in enumerate(self.pairs):
            out[2 * k] = value
            out[2 * k + 1] = float(rbin)
        return out


def fft2d(matrix: PolarMatrix) -> SpectrumMatrix:
    """Unnormalized forward 2-D DFT; entry (0, 0) equals the matrix total."""
    if not np.all(np.isfinite(matrix.values)):
        raise ValueError("polar matrix contains non-finite entries")
    return SpectrumMatrix(np.fft.fft2(matrix.values), matrix.origin_id, matrix.grid)


def ifft2d(spectrum: SpectrumMatrix) -> np.ndarray:
    """Inverse 2-D DFT with 1/(rows*cols) scaling; returns a complex array."""
    if not np.all(np.isfinite(spectrum.values)):
        raise ValueError("spectrum contains non-finite entries")
    return np.fft.ifft2(spectrum.values)


def triangular_mask(spectrum: SpectrumMatrix, mask_max: int) -> SpectrumMatrix:
    """Keep coefficients with row + col <= mask_max, zero the rest.

    Indices are plain array indices with DC at (0, 0); no frequency shift is
    applied. A mask_max of rows + cols - 2 or more keeps everything.
    """
    if mask_max < 0:
        raise ValueError("mask_max must be >= 0")
    rows, cols = spectrum.values.shape
    keep = np.add.outer(np.arange(rows), np.arange(cols)) <= mask_max
    return SpectrumMatrix(
        np.where(keep, spectrum.values, 0.0), spectrum.origin_id, spectrum.grid
    )


def rectangular_mask(
    spectrum: SpectrumMatrix,
    rows: int,
    cols: int,
    pivot: tuple[int, int],
    mode: str = "remove_low",
) -> SpectrumMatrix:
    """Zero a low-frequency block around a pivot, or everything outside it.

    The zero-frequency entry is shifted onto ``pivot``, a ``rows x cols``
    block centred there is zeroed (``remove_low``, a high-pass filter) or
    preserved with the complement zeroed (``keep_low``), and the shift is
    undone. A block reaching past the matrix edge is clipped.
    """
    if rows < 0 or cols < 0:
        raise ValueError("block dimensions must be >= 0")
    if mode not in ("remove_low", "keep_low"):
        raise ValueError(f"mode must be 'remove_low' or 'keep_low', got {mode!r}")
    d0, d1 = spectrum.values.shape
    pi, pj = pivot
    if not (0 <= pi < d0 and 0 <= pj < d1):
        raise ValueError(f"pivot {pivot} outside matrix of shape {(d0, d1)}")
    shifted = np.roll(spectrum.values, (pi, pj), axis=(0, 1))
    r0 = max(pi - rows // 2, 0)
    r1 = min(pi - rows // 2 + rows, d0)
    c0 = max(pj - cols // 2, 0)
    c1 = min(pj - cols // 2 + cols, d1)
    block = np.zeros((d0, d1), dtype=bool)
    if r0 < r1 and c0 < c1:
        block[r0:r1, c0:c1] = True
    out = shifted.copy()
    out[block if mode == "remove_low" else ~block] = 0.0
    out = np.roll(out, (-pi, -pj), axis=(0, 1))
    return SpectrumMatrix(out, spectrum.origin_id, spectrum.grid)


def power(re: float, im: float) -> float:
    """Magnitude sqrt(re^2 + im^2) of one coefficient: smoothed flow intensity."""
    if not (math.isfinite(re) and math.isfinite(im)):
        raise ValueError("power requires finite inputs")
    return math.hypot(re, im)


def summarize_spectrum(spectrum: SpectrumMatrix, mask_max: int) -> CompressionSummary:
    """Extract the triangular-mask coefficients of an (unmasked) spectrum."""
    if mask_max < 0:
        raise ValueError("mask_max must be >= 0")
    coeffs: list[tuple[int, int, float, float]] = []
    flat: list[float] = []
    d0, d1 = spectrum.values.shape
    for i in range(d0):
        for j in range(d1):
            if i + j > mask_max:
                continue
            c = spectrum.values[i, j]
            coeffs.append((i, j, float(c.real), float(c.imag)))
            flat.append(float(c.real))
            if (i, j) != (0, 0):
                flat.append(float(c.imag))
    return CompressionSummary(mask_max, tuple(coeffs), np.array(flat))


def compression_summary(
    origin: GeoNode, nodes: NodeSet, grid: PolarGrid, mask_max: int = 1
) -> CompressionSummary:
    """Polar matrix -> DFT -> triangular mask, flattened to independent reals."""
    return summarize_spectrum(fft2d(polar_matrix(origin, nodes, grid)), mask_max)


def magnitude_spectrum(spectrum: SpectrumMatrix) -> np.ndarray:
    """Elementwise magnitude of the inverse transform: the smoothed flow image."""
    return np.abs(ifft2d(spectrum))


def _summarize_row(row: np.ndarray, summary: str, threshold: float | None) -> tuple[float, int]:
    if summary == "max":
        col = int(np.argmax(row))  # argmax takes the lowest index on ties
        return float(row[col]), col
    if summary == "first_nonzero":
        floor = ZERO_TOL * max(float(row.max()), 1.0)
        for col, value in enumerate(row):
            if value > floor:
                return float(value), col
        return 0.0, 0
    if summary == "first_above":
        if threshold is None:
            raise ValueError("summary 'first_above' requires a threshold")
        for col, value in enumerate(row):
            if value >= threshold:
                return float(value), col
        return 0.0, 0
    raise ValueError(f"summary must be one of {SUMMARY_MODES}, got {summary!r}")


def geosig(
    origin: GeoNode,
    nodes: NodeSet,
    grid: PolarGrid,
    mask_max: int = 2,
    summary: str = "max",
    threshold: float | None = None,
    keep_magnitude: bool = False,
) -> Geosig:
    """Per-direction summary of the smoothed flow image around ``origin``.

    The default summary pairs each direction's peak intensity with the range
    bin where it first occurs. ``first_nonzero`` and ``first_above`` are
    alternative summaries over the same image; they answer "how close is the
    nearest (interesting) flow" instead of "where is the strongest flow".
    """
    masked = triangular_mask(fft2d(polar_matrix(origin, nodes, grid)), mask_max)
    image = magnitude_spectrum(masked)
    pairs = tuple(_summarize_row(image[k], summary, threshold) for k in range(image.shape[0]))
    return Geosig(
        origin.id,
        pairs,
        grid,
        mask_max,
        summary=summary,
        magnitude=image if keep_magnitude else None,
    )


def write_pgm(matrix: np.ndarray, path: str | Path) -> None:
    """Write a matrix as an ASCII PGM bitmap, each row normalized to 0..255."""
    values = np.asarray(matrix, dtype=float)
    if values.ndim != 2:
        raise ValueError("PGM export needs a 2-D matrix")
    rows, cols = values.shape
    scaled = np.zeros_like(values)
    for k in range(rows):
        peak = values[k].max()
        if peak > 0:
            scaled[k] = values[k] / peak * 255.0
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"P2\n{cols} {rows}\n255\n")
        for k in range(rows):
            fh.write(" ".join(str(int(round(v))) for v in scaled[k]))
            fh.write("\n")


def geosig_csv_header(theta_bins: int) -> list[str]:
    header = ["origin_id"]
    for k in range(theta_bins):
        header += [f"dir{k}_max", f"dir{k}_r"]
    return header


def write_geosig_csv(signatures: Iterable[Geosig], path: str | Path) -> None:
    signatures = list(signatures)
    if not signatures:
        raise ValueError("no signatures to write")
    theta_bins = signatures[0].grid.theta_bins
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(geosig_csv_header(theta_bins))
        for sig in signatures:
            row: list[str] = [sig.origin_id]
            for value, rbin in sig.pairs:
                row += [repr(value), str(rbin)]
            writer.writerow(row)
