"""
Tests for grid conventions, containers and the exchange formats.
"""

import io
import json
import struct

import numpy as np
import pytest

from posecast.core import (
    ContractError,
    DomainError,
    GridRangeError,
    GridSpec,
    Heatmap,
    HeatmapFormatError,
    HeatVector,
    JointSet,
    NormalizedHeatmap,
    cell_coordinate,
    cell_index,
    coordinate_grids,
    jointset_from_dict,
    jointset_to_dict,
    load_heatmap,
    read_heatmap,
    read_jointset,
    save_heatmap,
    write_heatmap,
    write_jointset,
)


class TestGridSpec:
    """Test GridSpec validation and helpers."""

    def test_rejects_non_positive_sizes(self):
        """Every dimension must be a positive integer."""
        with pytest.raises(ContractError):
            GridSpec(K=1, D=1, H=0, W=4)
        with pytest.raises(ContractError):
            GridSpec(K=1, D=1, H=4, W=2.5)
        with pytest.raises(ContractError):
            GridSpec(K=True, D=1, H=4, W=4)

    def test_axis_lengths_follow_coordinate_order(self):
        """Lengths come back as (W, H, D) to match (x, y, z)."""
        spec = GridSpec(K=2, D=3, H=4, W=5)
        assert spec.axis_lengths() == (5, 4, 3)
        assert spec.axis_length("y") == 4
        assert spec.cells == 60
        assert spec.shape == (2, 3, 4, 5)
        assert not spec.is_2d
        assert GridSpec(K=1, D=1, H=2, W=2).is_2d

    def test_dict_round_trip(self):
        """to_dict/from_dict preserve the grid; D defaults to 1."""
        spec = GridSpec(K=3, D=2, H=5, W=7)
        assert GridSpec.from_dict(spec.to_dict()) == spec
        assert GridSpec.from_dict({"K": 1, "H": 4, "W": 4}).D == 1


class TestCellCoordinate:
    """Test the row-major layout helpers."""

    def test_documented_indices(self):
        """Known linear indices map to their (x, y, z) cells."""
        assert cell_coordinate(GridSpec(K=1, D=1, H=4, W=5), 0) == (0, 0, 0)
        assert cell_coordinate(GridSpec(K=1, D=1, H=4, W=5), 7) == (2, 1, 0)
        assert cell_coordinate(GridSpec(K=1, D=3, H=4, W=5), 59) == (4, 3, 2)

    def test_out_of_range(self):
        """Indices outside [0, D*H*W) raise a range error."""
        spec = GridSpec(K=1, D=1, H=4, W=5)
        with pytest.raises(GridRangeError):
            cell_coordinate(spec, 20)
        with pytest.raises(IndexError):
            cell_coordinate(spec, -1)
        with pytest.raises(GridRangeError):
            cell_index(spec, 5, 0, 0)

    def test_layout_bijection(self, rng):
        """cell_index inverts cell_coordinate on random grids."""
        for _ in range(20):
            spec = GridSpec(K=1, D=int(rng.integers(1, 5)), H=int(rng.integers(1, 6)), W=int(rng.integers(1, 6)))
            for index in range(spec.cells):
                assert cell_index(spec, *cell_coordinate(spec, index)) == index

    def test_layout_matches_array_order(self):
        """A linear index addresses the same cell as numpy's row-major flattening."""
        spec = GridSpec(K=1, D=2, H=3, W=4)
        x, y, z = coordinate_grids(spec)
        for index in range(spec.cells):
            assert (x.reshape(-1)[index], y.reshape(-1)[index], z.reshape(-1)[index]) == cell_coordinate(spec, index)


class TestContainers:
    """Test Heatmap, NormalizedHeatmap, JointSet and HeatVector invariants."""

    def test_heatmap_is_read_only_copy(self):
        """The heatmap owns a frozen copy of its scores."""
        scores = np.zeros((1, 1, 2, 2))
        h = Heatmap(GridSpec(K=1, D=1, H=2, W=2), scores)
        scores[0, 0, 0, 0] = 5.0
        assert h.scores[0, 0, 0, 0] == 0.0
        with pytest.raises(ValueError):
            h.scores[0, 0, 0, 0] = 1.0

    def test_heatmap_rejects_bad_input(self):
        """Wrong sizes are contract errors, non-finite scores domain errors."""
        spec = GridSpec(K=1, D=1, H=2, W=2)
        with pytest.raises(ContractError):
            Heatmap(spec, np.zeros(3))
        with pytest.raises(DomainError):
            Heatmap(spec, [0.0, np.nan, 0.0, 0.0])

    def test_from_array_accepts_planar_arrays(self):
        """A (K, H, W) array becomes a D=1 heatmap."""
        h = Heatmap.from_array(np.zeros((2, 3, 4)))
        assert h.spec == GridSpec(K=2, D=1, H=3, W=4)

    def test_normalized_heatmap_sums_to_one(self):
        """Per-joint sums must be one."""
        spec = GridSpec(K=1, D=1, H=1, W=2)
        NormalizedHeatmap(spec, [0.25, 0.75])
        with pytest.raises(ContractError):
            NormalizedHeatmap(spec, [0.5, 0.6])

    def test_jointset_mask_allows_nan(self):
        """Unsupervised coordinates may be NaN; supervised ones may not."""
        planar = JointSet.planar([[1.0, 2.0, np.nan]])
        assert planar.mask.tolist() == [[True, True, False]]
        assert planar.filled(-1.0).tolist() == [[1.0, 2.0, -1.0]]
        with pytest.raises(DomainError):
            JointSet.full_mask([[1.0, 2.0, np.nan]])
        with pytest.raises(ContractError):
            JointSet(np.zeros((2, 2)), np.ones((2, 2), dtype=bool))

    def test_heat_vector_rows(self):
        """HeatVector rows are probability vectors over a known axis."""
        v = HeatVector("x", [[0.4, 0.6]])
        assert v.length == 2
        with pytest.raises(ContractError):
            HeatVector("w", [[1.0]])
        with pytest.raises(ContractError):
            HeatVector("x", [[0.4, 0.4]])


class TestHeatmapFormat:
    """Test the IHPR binary format."""

    def test_round_trip_is_bit_exact(self, rng):
        """Random heatmaps survive write/read unchanged."""
        for _ in range(100):
            spec = GridSpec(K=int(rng.integers(1, 3)), D=int(rng.integers(1, 3)),
                            H=int(rng.integers(1, 5)), W=int(rng.integers(1, 5)))
            h = Heatmap(spec, rng.normal(scale=1e3, size=spec.shape))
            buffer = io.BytesIO()
            written = write_heatmap(h, buffer)
            assert written == 24 + 8 * spec.K * spec.cells
            buffer.seek(0)
            back = read_heatmap(buffer)
            assert back.spec == spec
            assert back.scores.tobytes() == h.scores.tobytes()

    def test_minimal_heatmap(self, tmp_path):
        """A 1x1x1x1 heatmap with score 0.5 reads back as 0.5."""
        path = tmp_path / "one.ihpr"
        save_heatmap(Heatmap(GridSpec(K=1, D=1, H=1, W=1), [0.5]), path)
        assert path.read_bytes()[:4] == b"IHPR"
        assert load_heatmap(path).scores.reshape(-1).tolist() == [0.5]

    def test_bad_magic(self):
        """Wrong magic bytes are reported at offset 0."""
        payload = b"NOPE" + struct.pack("<5I", 1, 1, 1, 1, 1) + struct.pack("<d", 0.0)
        with pytest.raises(HeatmapFormatError) as exc_info:
            read_heatmap(io.BytesIO(payload))
        assert exc_info.value.offset == 0

    def test_version_mismatch(self):
        """An unknown version is reported at the version field."""
        payload = b"IHPR" + struct.pack("<5I", 2, 1, 1, 1, 1) + struct.pack("<d", 0.0)
        with pytest.raises(HeatmapFormatError) as exc_info:
            read_heatmap(io.BytesIO(payload))
        assert exc_info.value.offset == 4

    def test_truncated_payload(self):
        """A short payload names the offset where data ran out."""
        payload = b"IHPR" + struct.pack("<5I", 1, 1, 1, 1, 2) + struct.pack("<d", 0.0)
        with pytest.raises(HeatmapFormatError) as exc_info:
            read_heatmap(io.BytesIO(payload))
        assert exc_info.value.offset == 32

    def test_oversized_dimensions(self):
        """Dimensions whose payload size cannot be indexed are reported at the grid fields."""
        header = struct.pack("<4sI4I", b"IHPR", 1, 4_000_000_000, 4_000_000_000, 4_000_000_000, 4_000_000_000)
        with pytest.raises(HeatmapFormatError) as exc_info:
            read_heatmap(io.BytesIO(header))
        assert exc_info.value.offset == 8

    def test_large_declared_payload(self):
        """A payload far larger than the stream is a truncation at the end of the data."""
        header = struct.pack("<4sI4I", b"IHPR", 1, 1, 1, 65536, 65536)
        with pytest.raises(HeatmapFormatError) as exc_info:
            read_heatmap(io.BytesIO(header + struct.pack("<d", 1.0)))
        assert exc_info.value.offset == 32

    def test_non_finite_value(self):
        """A NaN score is reported at its own offset."""
        payload = b"IHPR" + struct.pack("<5I", 1, 1, 1, 1, 2) + struct.pack("<2d", 1.0, float("inf"))
        with pytest.raises(HeatmapFormatError) as exc_info:
            read_heatmap(io.BytesIO(payload))
        assert exc_info.value.offset == 32


class TestJointSetJson:
    """Test the JointSet JSON document."""

    def test_masked_nan_becomes_null(self):
        """Non-finite unsupervised coordinates serialize as null and come back as NaN."""
        joints = JointSet.planar([[1.5, 2.0, np.nan], [0.0, 3.25, np.nan]])
        data = jointset_to_dict(joints)
        assert data["coords"][0] == [1.5, 2.0, None]
        assert data["mask"][1] == [True, True, False]

        sink = io.StringIO()
        write_jointset(joints, sink)
        back = read_jointset(io.StringIO(sink.getvalue()))
        assert np.isnan(back.coords[0, 2])
        assert back.mask.tolist() == joints.mask.tolist()
        assert json.loads(sink.getvalue())["coords"][1][1] == 3.25

    def test_from_dict_full(self):
        """A fully supervised document round-trips its values."""
        joints = jointset_from_dict({"coords": [[1, 2, 3]], "mask": [[True, True, True]]})
        assert joints.coords.tolist() == [[1.0, 2.0, 3.0]]


if __name__ == "__main__":
    pytest.main([__file__])
