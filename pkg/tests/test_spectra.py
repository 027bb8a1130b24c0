import math

import numpy as np
import pytest

from lanesig.geometry import GeoNode, NodeSet, PolarGrid, PolarMatrix
from lanesig.spectra import (
    compression_summary,
    fft2d,
    geosig,
    ifft2d,
    magnitude_spectrum,
    power,
    rectangular_mask,
    triangular_mask,
    write_geosig_csv,
    write_pgm,
)

import oracles


def make_pm(values, origin_id="x"):
    values = np.asarray(values, dtype=float)
    grid = PolarGrid(
        theta_bins=values.shape[0],
        r_bins=values.shape[1],
        r_step=1.0,
        r_unit="degrees",
    )
    return PolarMatrix(values, origin_id, grid)


class TestFft:
    def test_zero_in_zero_out(self):
        F = fft2d(make_pm(np.zeros((4, 17))))
        assert not F.values.any()

    def test_dc_term_is_total(self):
        rng = np.random.default_rng(0)
        P = rng.uniform(0, 5, size=(4, 17))
        F = fft2d(make_pm(P))
        assert F.values[0, 0] == pytest.approx(P.sum(), rel=1e-12)
        assert abs(F.values[0, 0].imag) < 1e-12

    def test_matches_literal_double_sum(self):
        rng = np.random.default_rng(1)
        P = rng.uniform(0, 3, size=(4, 17))
        F = fft2d(make_pm(P))
        expected = oracles.dft2_loops(P)
        assert np.max(np.abs(F.values - expected)) < 1e-9

    def test_round_trip_random_shapes(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            shape = (int(rng.integers(1, 24)), int(rng.integers(1, 24)))
            P = rng.uniform(0, 4, size=shape)
            F = fft2d(make_pm(P))
            back = ifft2d(F)
            assert np.allclose(back.real, P, rtol=1e-9, atol=1e-9)
            assert np.max(np.abs(back.imag)) < 1e-9

    def test_parseval(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            P = rng.uniform(0, 2, size=(4, 17))
            F = fft2d(make_pm(P)).values
            lhs = np.sum(P**2)
            rhs = np.sum(np.abs(F) ** 2) / F.size
            assert lhs == pytest.approx(rhs, rel=1e-9)

    def test_masked_inverse_matches_oracle(self):
        rng = np.random.default_rng(4)
        P = rng.uniform(0, 2, size=(4, 17))
        masked = triangular_mask(fft2d(make_pm(P)), 2)
        ours = ifft2d(masked)
        expected = oracles.idft2_matmul(masked.values)
        assert np.max(np.abs(ours - expected)) < 1e-9

    def test_rejects_non_finite(self):
        P = np.zeros((2, 2))
        P[0, 0] = np.nan
        with pytest.raises(ValueError):
            fft2d(make_pm(P))


class TestTriangularMask:
    def test_mask_one_keeps_three_corner_entries(self):
        rng = np.random.default_rng(5)
        F = fft2d(make_pm(rng.uniform(0, 1, size=(4, 17))))
        kept = triangular_mask(F, 1).values
        nonzero = {tuple(ix) for ix in np.argwhere(kept != 0)}
        assert nonzero == {(0, 0), (0, 1), (1, 0)}

    def test_mask_two_keeps_six_entries(self):
        rng = np.random.default_rng(6)
        F = fft2d(make_pm(rng.uniform(0.5, 1, size=(4, 17))))
        kept = triangular_mask(F, 2).values
        nonzero = {tuple(ix) for ix in np.argwhere(kept != 0)}
        assert nonzero == {(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (2, 0)}

    def test_mask_zero_reconstructs_mean(self):
        rng = np.random.default_rng(7)
        P = rng.uniform(0, 9, size=(4, 17))
        image = magnitude_spectrum(triangular_mask(fft2d(make_pm(P)), 0))
        assert np.allclose(image, P.mean(), rtol=1e-12)

    def test_large_mask_is_identity(self):
        rng = np.random.default_rng(8)
        F = fft2d(make_pm(rng.uniform(0, 1, size=(4, 17))))
        assert np.array_equal(triangular_mask(F, 4 + 17 - 2).values, F.values)

    def test_negative_mask_rejected(self):
        F = fft2d(make_pm(np.zeros((2, 2))))
        with pytest.raises(ValueError):
            triangular_mask(F, -1)


class TestRectangularMask:
    def test_empty_block_is_identity(self):
        rng = np.random.default_rng(9)
        F = fft2d(make_pm(rng.uniform(0, 1, size=(8, 8))))
        out = rectangular_mask(F, 0, 0, (4, 4), mode="remove_low")
        assert np.array_equal(out.values, F.values)

    def test_keep_low_full_extent_is_identity(self):
        rng = np.random.default_rng(10)
        F = fft2d(make_pm(rng.uniform(0, 1, size=(8, 8))))
        out = rectangular_mask(F, 8, 8, (4, 4), mode="keep_low")
        assert np.array_equal(out.values, F.values)

    def test_remove_low_matches_shifted_oracle(self):
        rng = np.random.default_rng(11)
        P = rng.uniform(0, 2, size=(8, 8))
        F = fft2d(make_pm(P))
        pivot = (4, 4)
        ours = np.abs(ifft2d(rectangular_mask(F, 3, 3, pivot, mode="remove_low")))
        # oracle: naive DFT, explicit roll, explicit block zeroing, naive inverse
        Fo = oracles.dft2_matmul(P)
        shifted = np.roll(Fo, pivot, axis=(0, 1))
        for i in range(pivot[0] - 1, pivot[0] + 2):
            for j in range(pivot[1] - 1, pivot[1] + 2):
                shifted[i, j] = 0.0
        expected = np.abs(oracles.idft2_matmul(np.roll(shifted, (-4, -4), axis=(0, 1))))
        assert np.max(np.abs(ours - expected)) < 1e-9

    def test_block_clipped_at_edges(self):
        rng = np.random.default_rng(12)
        F = fft2d(make_pm(rng.uniform(0.5, 1, size=(4, 4))))
        out = rectangular_mask(F, 100, 100, (0, 0), mode="remove_low")
        # oversized block wipes the whole matrix once clipped
        assert not out.values.any()

    def test_mode_validation(self):
        F = fft2d(make_pm(np.zeros((2, 2))))
        with pytest.raises(ValueError):
            rectangular_mask(F, 1, 1, (0, 0), mode="bandpass")


class TestPower:
    def test_three_four_five(self):
        assert power(3.0, 4.0) == 5.0

    def test_zero(self):
        assert power(0.0, 0.0) == 0.0

    def test_negative_real(self):
        assert power(-5.0, 0.0) == 5.0

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            power(float("nan"), 0.0)


class TestCompressionSummary:
    def grid(self):
        return PolarGrid(theta_bins=4, r_bins=17, r_step=1.0, r_unit="degrees")

    def test_flat_length_five_for_mask_one(self):
        origin = GeoNode("o", 0.0, 0.0, 0.0)
        nodes = NodeSet(tuple(GeoNode(f"n{i}", 0.1 * i, 0.2 * i, 1.0) for i in range(1, 9)))
        cs = compression_summary(origin, nodes, self.grid(), mask_max=1)
        assert len(cs.flat) == 5
        assert [c[:2] for c in cs.coefficients] == [(0, 0), (0, 1), (1, 0)]

    def test_empty_set_all_zero(self):
        origin = GeoNode("o", 0.0, 0.0, 0.0)
        cs = compression_summary(origin, NodeSet(()), self.grid(), mask_max=1)
        assert not cs.flat.any()

    def test_flat_matches_naive_dft(self):
        rng = np.random.default_rng(13)
        origin = GeoNode("o", 0.0, 0.0, 0.0)
        nodes = NodeSet(
            tuple(
                GeoNode(f"n{i}", rng.uniform(-8, 8), rng.uniform(-8, 8), rng.uniform(0, 4))
                for i in range(60)
            )
        )
        from lanesig.geometry import polar_matrix

        cs = compression_summary(origin, nodes, self.grid(), mask_max=1)
        F = oracles.dft2_matmul(polar_matrix(origin, nodes, self.grid()).values)
        expected = [
            F[0, 0].real,
            F[0, 1].real,
            F[0, 1].imag,
            F[1, 0].real,
            F[1, 0].imag,
        ]
        assert np.allclose(cs.flat, expected, atol=1e-9)

    def test_flat_scales_linearly_in_measure(self):
        rng = np.random.default_rng(14)
        origin = GeoNode("o", 0.0, 0.0, 0.0)
        nodes = NodeSet(
            tuple(
                GeoNode(f"n{i}", rng.uniform(-8, 8), rng.uniform(-8, 8), rng.uniform(0, 4))
                for i in range(40)
            )
        )
        base = compression_summary(origin, nodes, self.grid(), mask_max=2)
        # power-of-two scaling is exact in floats; other factors round in the
        # measure accumulation and match only to precision
        doubled = compression_summary(origin, nodes.scaled(2.0), self.grid(), mask_max=2)
        assert np.array_equal(doubled.flat, 2.0 * base.flat)
        tripled = compression_summary(origin, nodes.scaled(3.0), self.grid(), mask_max=2)
        assert np.allclose(tripled.flat, 3.0 * base.flat, rtol=1e-12, atol=1e-9)


class TestMagnitudeSpectrum:
    def test_unmasked_recovers_nonnegative_input(self):
        rng = np.random.default_rng(15)
        P = rng.uniform(0, 6, size=(4, 17))
        image = magnitude_spectrum(fft2d(make_pm(P)))
        assert np.allclose(image, P, rtol=1e-9, atol=1e-9)

    def test_matches_masked_oracle(self):
        rng = np.random.default_rng(16)
        P = rng.uniform(0, 6, size=(4, 17))
        image = magnitude_spectrum(triangular_mask(fft2d(make_pm(P)), 2))
        assert np.max(np.abs(image - oracles.masked_magnitude(P, 2))) < 1e-9

    def test_monotone_fidelity_complex_error(self):
        # energy of dropped coefficients shrinks as the mask grows; exact
        rng = np.random.default_rng(17)
        for _ in range(20):
            P = rng.uniform(0, 1, size=(4, 17))
            F = fft2d(make_pm(P))
            errs = [
                np.linalg.norm(P - ifft2d(triangular_mask(F, m))) for m in range(20)
            ]
            assert all(b <= a + 1e-12 for a, b in zip(errs, errs[1:]))


class TestGeosig:
    def nodeset_from_matrix(self, P):
        # place one node at each nonzero bin centre so the polar matrix equals P
        grid = PolarGrid(theta_bins=P.shape[0], r_bins=P.shape[1], r_step=1.0, r_unit="degrees")
        nodes = []
        k = 0
        for i in range(P.shape[0]):
            for j in range(P.shape[1]):
                if P[i, j] == 0:
                    continue
                theta = grid.theta_width * (i + 0.5)
                r = j + 0.5
                nodes.append(GeoNode(f"n{k}", r * math.sin(theta), r * math.cos(theta), P[i, j]))
                k += 1
        return NodeSet(tuple(nodes)), grid

    def test_lossless_single_entry(self):
        P = np.zeros((4, 17))
        P[0, 5] = 100.0
        nodes, grid = self.nodeset_from_matrix(P)
        sig = geosig(GeoNode("o", 0, 0, 0), nodes, grid, mask_max=4 + 17 - 2)
        value, rbin = sig.pairs[0]
        assert value == pytest.approx(100.0, rel=1e-9)
        assert rbin == 5

    def test_uniform_matrix_ties_break_low(self):
        P = np.full((4, 6), 2.5)
        nodes, grid = self.nodeset_from_matrix(P)
        sig = geosig(GeoNode("o", 0, 0, 0), nodes, grid, mask_max=2)
        for value, rbin in sig.pairs:
            assert value == pytest.approx(2.5, rel=1e-9)
            assert rbin == 0

    def test_planted_ring_matches_oracle(self):
        P = np.zeros((4, 17))
        P[0, 4] = 80.0
        P[0, 5] = 90.0
        nodes, grid = self.nodeset_from_matrix(P)
        sig = geosig(GeoNode("o", 0, 0, 0), nodes, grid, mask_max=2)
        expected = oracles.row_max_pairs(oracles.masked_magnitude(P, 2))
        for (value, rbin), (evalue, ebin) in zip(sig.pairs, expected):
            assert rbin == ebin
            assert value == pytest.approx(evalue, abs=1e-9)
        assert 3 <= sig.pairs[0][1] <= 6

    def test_random_matrices_match_oracle(self):
        rng = np.random.default_rng(18)
        origin = GeoNode("o", 0, 0, 0)
        for _ in range(10):
            P = np.round(rng.uniform(0, 9, size=(4, 17)), 3)
            nodes, grid = self.nodeset_from_matrix(P)
            sig = geosig(origin, nodes, grid, mask_max=2)
            expected = oracles.row_max_pairs(oracles.masked_magnitude(P, 2))
            for (value, rbin), (evalue, ebin) in zip(sig.pairs, expected):
                assert rbin == ebin
                assert value == pytest.approx(evalue, abs=1e-9)

    def test_all_zero_flow(self):
        grid = PolarGrid(theta_bins=4, r_bins=5, r_step=1.0, r_unit="degrees")
        sig = geosig(GeoNode("o", 0, 0, 0), NodeSet(()), grid, mask_max=2)
        assert sig.pairs == ((0.0, 0),) * 4

    def test_flat_length_is_twice_directions(self):
        grid = PolarGrid(theta_bins=4, r_bins=17, r_step=1.0, r_unit="degrees")
        sig = geosig(GeoNode("o", 0, 0, 0), NodeSet(()), grid)
        assert sig.flat.shape == (8,)

    def test_first_above_mode(self):
        P = np.zeros((4, 8))
        P[2, 3] = 50.0
        P[2, 6] = 70.0
        nodes, grid = self.nodeset_from_matrix(P)
        sig = geosig(
            GeoNode("o", 0, 0, 0), nodes, grid, mask_max=4 + 8 - 2,
            summary="first_above", threshold=40.0,
        )
        value, rbin = sig.pairs[2]
        assert rbin == 3
        assert value == pytest.approx(50.0, rel=1e-9)

    def test_first_above_requires_threshold(self):
        grid = PolarGrid(theta_bins=4, r_bins=5, r_step=1.0, r_unit="degrees")
        with pytest.raises(ValueError):
            geosig(GeoNode("o", 0, 0, 0), NodeSet(()), grid, summary="first_above")


class TestExports:
    def test_pgm_row_normalized(self, tmp_path):
        path = tmp_path / "img.pgm"
        write_pgm(np.array([[0.0, 5.0], [2.0, 2.0]]), path)
        text = path.read_text().splitlines()
        assert text[0] == "P2"
        assert text[1] == "2 2"
        assert text[2] == "255"
        assert text[3].split() == ["0", "255"]
        assert text[4].split() == ["255", "255"]

    def test_geosig_csv(self, tmp_path):
        grid = PolarGrid()
        sig = geosig(GeoNode("fc1", 0, 0, 0), NodeSet(()), grid)
        path = tmp_path / "sig.csv"
        write_geosig_csv([sig], path)
        lines = path.read_text().splitlines()
        assert lines[0] == (
            "origin_id,dir0_max,dir0_r,dir1_max,dir1_r,dir2_max,dir2_r,dir3_max,dir3_r"
        )
        assert lines[1].startswith("fc1,")
