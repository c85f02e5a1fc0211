import numpy as np
import pytest

from traversim.terrain import (
    ElevationMap,
    InvalidParams,
    NegativeBase,
    OutOfBounds,
    TerrainParams,
    generate_map,
    intrp,
    list_presets,
    load_preset,
)


def flat_field_params(**overrides):
    base = dict(
        alpha_m=0.5, beta_m=0.0, gamma_m=0.5,
        alpha_p=0.5, beta_p=0.0, gamma_p=0.25, delta=1.0,
        alpha_w=0.5, beta_w=0.0, gamma_w=2.0,
        u=1.0, d=0.0,
    )
    base.update(overrides)
    return TerrainParams(**base)


class TestIntrp:
    def test_above_upper(self):
        assert intrp(2.0, 1.0, 0.0) == 1.0

    def test_below_lower(self):
        assert intrp(-1.0, 1.0, 0.0) == 0.0

    def test_midpoint(self):
        assert intrp(0.5, 1.0, 0.0) == 0.5

    def test_boundaries_continuous(self):
        assert intrp(1.0, 1.0, 0.0) == 1.0
        assert intrp(0.0, 1.0, 0.0) == 0.0

    def test_monotone(self):
        rng = np.random.default_rng(0)
        v = np.sort(rng.uniform(-3, 3, size=200))
        out = intrp(v, 0.7, -0.2)
        assert np.all(np.diff(out) >= 0)
        assert np.all((out >= 0) & (out <= 1))

    def test_requires_d_below_u(self):
        with pytest.raises(InvalidParams):
            intrp(0.0, 1.0, 1.0)


class TestTerrainParams:
    def test_delta_domain(self):
        with pytest.raises(InvalidParams):
            flat_field_params(delta=1.5)
        with pytest.raises(InvalidParams):
            flat_field_params(delta=-0.1)

    def test_threshold_order(self):
        with pytest.raises(InvalidParams):
            flat_field_params(u=0.0, d=0.0)

    def test_nonnegative_betas(self):
        with pytest.raises(InvalidParams):
            flat_field_params(beta_m=-1.0)

    def test_seed_derivation(self):
        p = flat_field_params().with_seeds(100)
        assert (p.seed_m, p.seed_p, p.seed_w) == (100, 101, 102)
        shared = flat_field_params().with_seeds(100, shared=True)
        assert (shared.seed_m, shared.seed_p, shared.seed_w) == (100, 100, 100)


class TestGenerateMap:
    def test_flat_plain_selected(self):
        # Zero-amplitude noise, weight saturated at 1: the plain term wins.
        emap = generate_map(flat_field_params(), side_cells=33)
        np.testing.assert_array_equal(emap.cells, 0.25)

    def test_flat_mountain_selected(self):
        emap = generate_map(flat_field_params(gamma_w=-1.0), side_cells=33)
        np.testing.assert_array_equal(emap.cells, 0.5)

    def test_mid_blend(self):
        # Weight field sits exactly between thresholds: Z = (p + m) / 2.
        emap = generate_map(flat_field_params(gamma_w=0.5), side_cells=33)
        np.testing.assert_allclose(emap.cells, 0.5 * 0.25 + 0.5 * 0.5)

    def test_deterministic(self):
        params = load_preset("dunes", master_seed=9)
        a = generate_map(params)
        b = generate_map(params)
        np.testing.assert_array_equal(a.cells, b.cells)

    def test_default_geometry(self):
        emap = generate_map(load_preset("plains", master_seed=1))
        assert emap.side_cells == 129
        assert emap.cell_size == 0.0625
        assert emap.extent == 8.0

    def test_negative_base_clamped(self):
        params = flat_field_params(gamma_p=-0.25, delta=0.5, gamma_w=2.0)
        emap = generate_map(params, side_cells=17)
        np.testing.assert_array_equal(emap.cells, 0.0)

    def test_negative_base_raises_when_strict(self):
        params = flat_field_params(gamma_p=-0.25, delta=0.5)
        with pytest.raises(NegativeBase):
            generate_map(params, side_cells=17, clamp_negative_base=False)

    def test_blend_between_fields(self):
        # Z must lie between the mountain and plain fields cell-wise.
        for name in list_presets():
            params = load_preset(name, master_seed=3)
            emap = generate_map(params, side_cells=65)
            assert np.all(np.isfinite(emap.cells))

    def test_world_coordinates_drive_noise(self):
        # Halving cell size with the same params refines the same terrain:
        # coarse cell centers are a subset of fine ones with equal values.
        params = load_preset("dunes", master_seed=4)
        coarse = generate_map(params, side_cells=33, cell_size=0.25)
        fine = generate_map(params, side_cells=65, cell_size=0.125)
        np.testing.assert_allclose(coarse.cells, fine.cells[::2, ::2], atol=1e-12)


class TestElevationMap:
    def make_ramp(self):
        # z = x over a 5x5 grid, cell 1.0
        xs = np.arange(5) - 2.0
        cells = np.tile(xs, (5, 1))
        return ElevationMap(cells, cell_size=1.0)

    def test_cell_center_queries(self):
        emap = self.make_ramp()
        assert emap.elevation_at(0.0, 0.0) == 0.0
        assert emap.elevation_at(2.0, -1.0) == 2.0
        assert emap.elevation_at(-2.0, 2.0) == -2.0

    def test_midpoint_interpolation(self):
        emap = self.make_ramp()
        assert emap.elevation_at(0.5, 0.0) == pytest.approx(0.5)
        cells = np.zeros((3, 3))
        cells[1, 2] = 1.0  # (x=1, y=0)
        emap2 = ElevationMap(cells, cell_size=1.0)
        assert emap2.elevation_at(0.5, 0.0) == pytest.approx(0.5)

    def test_out_of_bounds(self):
        emap = self.make_ramp()
        with pytest.raises(OutOfBounds):
            emap.elevation_at(2.01, 0.0)
        with pytest.raises(OutOfBounds):
            emap.elevation_at(0.0, -2.5)

    def test_boundary_inclusive(self):
        emap = self.make_ramp()
        assert emap.elevation_at(2.0, 2.0) == 2.0

    def test_vector_queries(self):
        emap = self.make_ramp()
        xs = np.array([0.0, 1.5, -1.25])
        ys = np.array([0.0, 0.5, 1.0])
        np.testing.assert_allclose(emap.elevation_at(xs, ys), xs)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            ElevationMap(np.zeros((3, 4)))

    def test_rejects_non_finite(self):
        cells = np.zeros((3, 3))
        cells[0, 0] = np.nan
        with pytest.raises(ValueError):
            ElevationMap(cells)


class TestPresets:
    def test_builtin_presets_exist(self):
        names = list_presets()
        assert "plains" in names and "mountains" in names
        assert len(names) >= 5

    def test_unknown_preset(self):
        with pytest.raises(FileNotFoundError):
            load_preset("nope", master_seed=0)

    def test_env_override(self, tmp_path, monkeypatch):
        cfg = tmp_path / "only.cfg"
        cfg.write_text(
            "alpha_m = 1\nbeta_m = 0\ngamma_m = 0\n"
            "alpha_p = 1\nbeta_p = 0\ngamma_p = 1\ndelta = 1\n"
            "alpha_w = 1\nbeta_w = 0\ngamma_w = 2\nu = 1\nd = 0\n"
        )
        monkeypatch.setenv("TRAVERSE_SIM_PRESETS", str(tmp_path))
        assert list_presets() == ["only"]
        params = load_preset("only", master_seed=5)
        assert params.gamma_p == 1.0
