"""Tests for case files, forcing, heterogeneity, writers, the pipeline and the CLI"""

import json
from dataclasses import replace

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose

from conftest import CASES, COLUMN_CASE, write_case
from driver.case_file import PatchCondition, load_case, parse_case, render_case
from driver.cli import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, cli
from driver.config import Settings
from driver.forcing import (
    SECONDS_PER_DAY,
    FluxSeries,
    flux_at,
    read_flux_series,
    synthetic_monsoon_series,
    write_flux_series,
)
from driver.gardner import (
    build_gardner_case,
    gardner_admissible,
    gardner_analytic_h,
    gardner_flux_bound,
)
from driver.heterogeneity import apply_ks_field, lognormal_ks_field
from driver.pipeline import SimulationPipeline
from driver.writers import (
    SnapshotObserver,
    read_snapshot,
    validate_probes,
    write_probes,
    write_snapshot,
    write_table,
)
from richards.assembly import FluxSeriesBC
from richards.constitutive import Gardner, hydraulic_conductivity, water_content
from richards.errors import CaseParseError, ConfigurationError, InvalidInputError, OutOfRangeError, ValidityError
from richards.grid import GridSpec, build_grid


def edited(text: str, old: str, new: str) -> str:
    assert old in text
    return text.replace(old, new)


class TestCaseFile:

    @pytest.mark.parametrize("path", sorted(CASES.glob("*.case")), ids=lambda p: p.stem)
    def test_bundled_cases_parse_and_render_back(self, path):
        spec = load_case(path)
        assert parse_case(render_case(spec)) == spec

    def test_loam_column_values(self):
        spec = load_case(CASES / "loam_column.case")
        assert spec.name == "loam_column"
        assert spec.grid.cells == (1, 1, 100)
        assert spec.zones[0].soil.Ks == 2.89e-6
        assert spec.conditions["top"] == PatchCondition("dirichlet", head=0.01)
        assert spec.conditions["bottom"] == PatchCondition("free_drainage")
        assert spec.numerics.dt_init == 300.0 and spec.numerics.max_picard_iters == 8
        assert spec.t_end == 432000.0
        assert [p.cell for p in spec.probes] == [(0, 0, 89), (0, 0, 49), (0, 0, 9)]

    def test_monsoon_layers(self):
        spec = load_case(CASES / "monsoon_layers.case")
        assert [z.region.bounds for z in spec.zones] == [(270, 300), (200, 270), (0, 200)]
        assert spec.conditions["surface"] == PatchCondition("flux_series", series="synthetic", seed=2011)

    def test_random_field_section(self):
        rf = load_case(CASES / "steep_front.case").random_field
        assert (rf.geo_mean, rf.sigma_log10, rf.clamp, rf.seed) == (1e-6, 1.17, (1e-10, 1e-3), 7)

    def test_missing_mandatory_key(self):
        with pytest.raises(CaseParseError, match="missing mandatory key 'grid.cells'"):
            parse_case(edited(COLUMN_CASE, "grid.cells = 1 1 10\n", ""))

    def test_overlapping_zones(self):
        text = COLUMN_CASE + "soil.lens.Ks = 1e-5\nsoil.lens.alpha = 2.0\nsoil.lens.n = 2.0\n" \
                             "soil.lens.theta_s = 0.4\nsoil.lens.theta_r = 0.1\nsoil.lens.region = layer 0 3\n"
        with pytest.raises(CaseParseError, match="soil zones overlap"):
            parse_case(text)

    def test_uncovered_cells(self):
        with pytest.raises(CaseParseError, match="uncovered"):
            parse_case(COLUMN_CASE + "soil.loam.region = layer 0 5\n")

    def test_patch_without_face(self):
        with pytest.raises(CaseParseError, match="unknown patch 'side'"):
            parse_case(COLUMN_CASE + "patch.side.type = flux\npatch.side.flux = 0.0\n")

    def test_soil_parameters_checked(self):
        with pytest.raises(CaseParseError, match="theta_r < theta_s"):
            parse_case(edited(COLUMN_CASE, "theta_r = 0.078", "theta_r = 0.5"))

    def test_probe_outside_grid(self):
        with pytest.raises(CaseParseError, match="outside the grid"):
            parse_case(edited(COLUMN_CASE, "probe.top.cell = 0 0 9", "probe.top.cell = 0 0 10"))

    def test_every_problem_reported_with_its_line(self):
        text = edited(COLUMN_CASE, "numerics.tol_picard = 1e-6", "numerics.tol_picard = 1e-12")
        text += "foo.bar = 1\n"
        with pytest.raises(CaseParseError) as info:
            parse_case(text, source="column.case")
        problems = info.value.problems
        line = COLUMN_CASE.splitlines().index("numerics.tol_picard = 1e-6") + 1
        assert len(problems) == 2
        assert any("must exceed" in p and p.startswith(f"line {line}:") for p in problems)
        assert any("unknown section 'foo'" in p for p in problems)
        assert "column.case" in str(info.value)

    def test_cuts_must_multiply_to_parts(self):
        with pytest.raises(CaseParseError, match="do not multiply"):
            parse_case(COLUMN_CASE + "run.parts = 2\nrun.cuts = 1 1 3\n")

    def test_part_count_left_open_unless_given(self):
        assert parse_case(COLUMN_CASE).parts is None
        assert parse_case(COLUMN_CASE + "run.cuts = 1 1 2\n").parts == 2
        assert parse_case(COLUMN_CASE + "run.parts = 3\n").parts == 3
        assert "run.parts" not in render_case(parse_case(COLUMN_CASE))

    def test_gardner_zone_defaults(self):
        text = COLUMN_CASE.replace("soil.loam.n = 1.56\n", "").replace("soil.loam.theta_s = 0.43\n", "")
        text = text.replace("soil.loam.theta_r = 0.078\n", "") + "soil.loam.model = gardner\n"
        soil = parse_case(text).zones[0].soil
        assert isinstance(soil, Gardner)
        assert (soil.theta_s, soil.theta_r) == (0.40, 0.05)


class TestForcing:

    @pytest.fixture
    def series(self):
        return FluxSeries.from_records([(0.0, -1e-6), (100.0, 2e-7), (300.0, 0.0)])

    def test_piecewise_constant_left_closed(self, series):
        assert flux_at(series, 0.0) == -1e-6
        assert flux_at(series, 99.9) == -1e-6
        assert flux_at(series, 100.0) == 2e-7
        assert flux_at(series, 450.0) == 0.0

    def test_last_record_covers_one_more_interval(self, series):
        assert series.end == 500.0
        assert flux_at(series, 500.0) == 0.0
        with pytest.raises(OutOfRangeError):
            flux_at(series, 500.5)
        with pytest.raises(OutOfRangeError):
            flux_at(series, -1.0)

    def test_invalid_series(self):
        with pytest.raises(InvalidInputError):
            FluxSeries.from_records([(0.0, 1.0), (0.0, 2.0)])
        with pytest.raises(InvalidInputError):
            FluxSeries.from_records([(0.0, 1.0)])

    def test_csv_written_and_read(self, series, tmp_path):
        path = write_flux_series(series, tmp_path / "flux.csv")
        back = read_flux_series(path, end=500.0)
        assert back.starts.tolist() == series.starts.tolist()
        assert back.fluxes.tolist() == series.fluxes.tolist()

    def test_csv_needs_the_header(self, tmp_path):
        path = tmp_path / "flux.csv"
        path.write_text("time,flux\n0,1e-7\n60,2e-7\n")
        with pytest.raises(CaseParseError, match="t_start_seconds"):
            read_flux_series(path)

    def test_csv_reports_bad_lines(self, tmp_path):
        path = tmp_path / "flux.csv"
        path.write_text("t_start_seconds,flux_m_per_s\n0,-1e-7\n60,abc\n")
        with pytest.raises(CaseParseError, match="line 3"):
            read_flux_series(path)

    def test_synthetic_year(self):
        a = synthetic_monsoon_series(seed=2011)
        assert len(a) == 365
        assert a.end == 365 * SECONDS_PER_DAY
        assert np.array_equal(a.fluxes, synthetic_monsoon_series(seed=2011).fluxes)
        assert not np.array_equal(a.fluxes, synthetic_monsoon_series(seed=2012).fluxes)

    def test_synthetic_wet_season_is_net_inflow(self):
        flux = synthetic_monsoon_series(seed=3).fluxes
        wet = np.zeros(365, dtype=bool)
        wet[90:304] = True
        assert flux[wet].mean() < 0 < flux[~wet].mean()


class TestHeterogeneity:

    def test_log10_statistics(self):
        ks = lognormal_ks_field(1_000_000, geo_mean=1e-6, sigma_log10=1.17, clamp=(1e-30, 1.0), seed=0)
        logs = np.log10(ks)
        assert logs.mean() == pytest.approx(-6.0, abs=0.01)
        assert logs.std() == pytest.approx(1.17, abs=0.01)

    def test_clamp_and_seed(self):
        a = lognormal_ks_field(5000, seed=7)
        assert a.min() >= 1e-10 and a.max() <= 1e-3
        assert np.array_equal(a, lognormal_ks_field(5000, seed=7))

    def test_zero_spread_is_uniform(self):
        grid = build_grid(GridSpec(cells=(2, 2, 2), spacing=(1.0, 1.0, 1.0)))
        assert lognormal_ks_field(grid, sigma_log10=0.0).tolist() == [1e-6] * 8

    def test_invalid_parameters(self):
        with pytest.raises(InvalidInputError):
            lognormal_ks_field(10, geo_mean=-1.0)
        with pytest.raises(InvalidInputError):
            lognormal_ks_field(10, clamp=(1e-3, 1e-10))

    def test_apply_with_mask(self, loam):
        ks = np.array([1e-5, 2e-5, 3e-5])
        soil = apply_ks_field(loam, ks, np.array([True, False, True]))
        assert soil.Ks.tolist() == [1e-5, 2.89e-6, 3e-5]
        assert soil.n == loam.n


class TestGardner:

    def test_zero_flux_is_hydrostatic(self):
        z = np.linspace(0.0, 1.0, 11)
        assert_allclose(gardner_analytic_h(1e-6, 0.06, 0.0, z), -z, atol=1e-14)

    def test_value_at_mid_column(self):
        assert gardner_analytic_h(1e-6, 0.06, 1e-7, 0.5) == pytest.approx(-0.44932, abs=1e-5)

    def test_flux_bound(self):
        assert gardner_flux_bound(1e-6, 0.06, 1.0) == pytest.approx(-1.61717e-5, rel=1e-5)

    def test_outside_validity_raises(self):
        with pytest.raises(ValidityError):
            gardner_analytic_h(1e-6, 0.06, -2e-5, np.linspace(0.0, 1.0, 11))

    @pytest.mark.parametrize("q, ok", [(0.0, True), (5e-7, True), (-5e-6, True), (2e-6, False), (-2e-5, False)])
    def test_admissible_fluxes(self, q, ok):
        assert gardner_admissible(1e-6, 0.06, 1.0, q) is ok

    def test_closed_form_satisfies_darcy(self):
        """Central-difference residual of q = K(h)(dh/dz + 1) shrinks with the step"""
        soil = Gardner(Ks=1e-6, alpha=0.06)
        q, z = 1e-7, 0.5

        def residual(d):
            dh = (gardner_analytic_h(1e-6, 0.06, q, z + d) - gardner_analytic_h(1e-6, 0.06, q, z - d)) / (2 * d)
            h = gardner_analytic_h(1e-6, 0.06, q, z)
            return abs(hydraulic_conductivity(soil, h) * (dh + 1.0) - q)

        assert residual(0.01) < residual(0.1)
        assert residual(0.01) < 1e-6 * q

    def test_case_for_a_flux(self):
        spec = build_gardner_case(-2e-7, cells=50)
        assert spec.grid.cells == (1, 1, 50)
        assert spec.conditions["top"] == PatchCondition("flux", flux=-2e-7)
        assert spec.conditions["bottom"] == PatchCondition("dirichlet", head=0.0)
        assert spec.initial.water_table == 0.0


class TestWriters:

    @pytest.fixture
    def grid(self):
        return build_grid(GridSpec(cells=(2, 3, 4), spacing=(1.0, 0.5, 0.25)))

    def test_snapshot_layout(self, grid, tmp_path):
        path = write_snapshot(grid, {"h": np.arange(24.0) / 3.0}, tmp_path / "s.vtk", title="t = 0 s")
        lines = path.read_text().splitlines()
        assert lines[:8] == [
            "# vtk DataFile Version 3.0", "t = 0 s", "ASCII", "DATASET STRUCTURED_POINTS",
            "DIMENSIONS 3 4 5", "ORIGIN 0 0 0", "SPACING 1 0.5 0.25", "CELL_DATA 24",
        ]
        assert lines[8:10] == ["SCALARS h double 1", "LOOKUP_TABLE default"]
        assert len(lines) == 10 + 24

    def test_snapshot_reads_back_exactly(self, grid, tmp_path, rng):
        h = rng.standard_normal(24)
        path = write_snapshot(grid, {"h": h, "theta": np.abs(h)}, tmp_path / "s.vtk")
        snap = read_snapshot(path)
        assert snap.cells == (2, 3, 4)
        assert np.array_equal(snap.fields["h"], h)
        assert np.array_equal(snap.fields["theta"], np.abs(h))

    def test_same_field_same_bytes(self, grid, tmp_path, rng):
        h = rng.standard_normal(24)
        a = write_snapshot(grid, {"h": h}, tmp_path / "a.vtk")
        b = write_snapshot(grid, {"h": h.copy()}, tmp_path / "b.vtk")
        assert a.read_bytes() == b.read_bytes()

    def test_snapshot_rejects_wrong_size(self, grid, tmp_path):
        with pytest.raises(ConfigurationError):
            write_snapshot(grid, {"h": np.zeros(23)}, tmp_path / "s.vtk")

    def test_snapshot_observer_keeps_an_index(self, grid, tmp_path, loam):
        observer = SnapshotObserver(grid, loam, tmp_path / "snapshots", interval=60.0)
        observer(0.0, np.full(24, -1.0))
        observer(60.0, np.full(24, -0.5))
        index = pd.read_csv(observer.write_index())
        assert index["file"].tolist() == ["snapshot_00000.vtk", "snapshot_00001.vtk"]
        theta = read_snapshot(tmp_path / "snapshots" / "snapshot_00001.vtk").fields["theta"]
        assert_allclose(theta, water_content(loam, -0.5))

    def test_probes_append_rows(self, grid, tmp_path, loam):
        cells = validate_probes(grid, {"a": (0, 0, 0), "b": (1, 2, 3)})
        assert cells == {"a": 0, "b": 23}
        path = tmp_path / "probes.csv"
        h = np.linspace(-2.0, 0.0, 24)
        write_probes(cells, 0.0, h, loam, path)
        write_probes(cells, 60.0, h, loam, path)
        df = pd.read_csv(path)
        assert df.columns.tolist() == ["t", "theta_a", "theta_b", "h_a", "h_b"]
        assert df["t"].tolist() == [0.0, 60.0]
        assert df["h_b"].iloc[0] == 0.0
        assert df["theta_b"].iloc[0] == pytest.approx(0.43)

    def test_probe_outside_grid(self, grid):
        with pytest.raises(ConfigurationError):
            validate_probes(grid, {"far": (2, 0, 0)})

    def test_table_header_without_rows(self, tmp_path):
        path = write_table([], ["t", "dt"], tmp_path / "log.csv")
        assert path.read_text().strip() == "t,dt"


class TestSettings:

    KEYS = ("RICHARDS_OUTPUT_DIR", "RICHARDS_PARTS", "RICHARDS_COLLECTIVE_TIMEOUT", "RICHARDS_VERBOSE")

    @pytest.fixture(autouse=True)
    def clean_env(self, monkeypatch):
        for key in self.KEYS:
            monkeypatch.delenv(key, raising=False)

    def test_defaults(self):
        assert Settings.from_env(dotenv=False) == Settings()

    def test_values_from_environment(self, monkeypatch):
        monkeypatch.setenv("RICHARDS_PARTS", "4")
        monkeypatch.setenv("RICHARDS_VERBOSE", "off")
        monkeypatch.setenv("RICHARDS_COLLECTIVE_TIMEOUT", "12.5")
        settings = Settings.from_env(dotenv=False)
        assert (settings.parts, settings.verbose, settings.collective_timeout) == (4, False, 12.5)

    @pytest.mark.parametrize("key, value", [
        ("RICHARDS_PARTS", "0"),
        ("RICHARDS_PARTS", "two"),
        ("RICHARDS_VERBOSE", "maybe"),
        ("RICHARDS_COLLECTIVE_TIMEOUT", "-1"),
    ])
    def test_bad_values(self, monkeypatch, key, value):
        monkeypatch.setenv(key, value)
        with pytest.raises(ConfigurationError):
            Settings.from_env(dotenv=False)


class TestPipeline:

    def test_run_writes_every_record(self, tmp_path, settings):
        spec = load_case(write_case(tmp_path))
        out = tmp_path / "out"
        report = SimulationPipeline(spec, settings=settings, output_dir=str(out)).run()
        assert report.status == "completed"
        assert report.result.t == 3600.0

        log = pd.read_csv(out / "run_log.csv")
        assert log.columns.tolist() == ["t", "dt", "picard_iters", "pcg_iters_total", "mass_error"]
        assert log["t"].iloc[-1] == 3600.0
        history = pd.read_csv(out / "history.csv")
        assert history.columns.tolist() == ["t", "mean_head", "storage", "flux_bottom", "flux_top", "flux_walls"]
        assert history["flux_top"].iloc[-1] == pytest.approx(-5e-7)
        assert pd.read_csv(out / "rejected_steps.csv").columns.tolist()[0] == "t_target"

        index = pd.read_csv(out / "snapshots" / "snapshots.csv")
        assert index["t"].tolist() == [0.0, 1800.0, 3600.0]
        probes = pd.read_csv(out / "probes.csv")
        assert probes["t"].tolist() == [600.0 * k for k in range(7)]

        summary = json.loads((out / "run_summary.json").read_text())
        assert summary["run_info"]["status"] == "completed"
        assert summary["counts"]["accepted_steps"] == len(log)
        assert summary["mass_balance"]["relative_error"] < 1e-4

    def test_parts_give_the_same_answer(self, tmp_path, settings):
        spec = load_case(write_case(tmp_path))
        spec = replace(spec, numerics=replace(spec.numerics, dt_max=60.0))
        one = SimulationPipeline(spec, parts=1, settings=settings, write_outputs=False).run()
        two = SimulationPipeline(spec, parts=2, settings=settings, write_outputs=False).run()
        assert_allclose(two.h, one.h, atol=1e-5)
        assert len(two.parts) == 2

    def test_fixed_head_on_the_top_cell(self, tmp_path, settings):
        text = edited(COLUMN_CASE, "patch.top.type = flux\npatch.top.flux = -5e-7",
                      "patch.top.type = dirichlet\npatch.top.head = 0.01")
        report = SimulationPipeline(load_case(write_case(tmp_path, text)), settings=settings,
                                    write_outputs=False).run(t_end=600.0)
        assert report.status == "completed"
        assert report.result.t == 600.0
        assert report.result.history[-1]["flux_top"] < 0.0

    def test_part_count_from_environment(self, tmp_path, monkeypatch):
        for key in TestSettings.KEYS:
            monkeypatch.delenv(key, raising=False)
        monkeypatch.setenv("RICHARDS_PARTS", "2")
        monkeypatch.setenv("RICHARDS_VERBOSE", "false")
        settings = Settings.from_env(dotenv=False)
        pipeline = SimulationPipeline(load_case(write_case(tmp_path)), settings=settings, write_outputs=False)
        assert pipeline.parts == 2
        assert pipeline.partition.cuts == (1, 1, 2)

        fixed = SimulationPipeline(load_case(write_case(tmp_path, COLUMN_CASE + "run.parts = 1\n")),
                                   settings=settings, write_outputs=False)
        assert fixed.parts == 1

    def test_threads_must_cover_parts(self, tmp_path, settings):
        spec = load_case(write_case(tmp_path))
        with pytest.raises(ConfigurationError):
            SimulationPipeline(spec, parts=2, threads=1, settings=settings, write_outputs=False).run()

    def test_initial_head_from_snapshot(self, tmp_path, settings):
        grid = build_grid(GridSpec(cells=(1, 1, 10), spacing=(1.0, 1.0, 0.1)))
        start = np.linspace(-2.0, -0.5, 10)
        write_snapshot(grid, {"h": start}, tmp_path / "start.vtk")
        text = edited(COLUMN_CASE, "initial.type = uniform\ninitial.head = -1.0",
                      "initial.type = file\ninitial.file = start.vtk")
        pipeline = SimulationPipeline(load_case(write_case(tmp_path, text)), settings=settings)
        assert np.array_equal(pipeline.h0, start)

    def test_flux_series_from_csv(self, tmp_path, settings):
        (tmp_path / "rain.csv").write_text("t_start_seconds,flux_m_per_s\n0,-1e-7\n1800,-2e-7\n")
        text = edited(COLUMN_CASE, "patch.top.type = flux\npatch.top.flux = -5e-7",
                      "patch.top.type = flux_series\npatch.top.series = rain.csv")
        pipeline = SimulationPipeline(load_case(write_case(tmp_path, text)), settings=settings)
        assert isinstance(pipeline.bcs["top"], FluxSeriesBC)
        assert pipeline.bcs["top"].series.flux_at(2000.0) == -2e-7

    def test_flux_series_must_cover_the_run(self, tmp_path, settings):
        (tmp_path / "rain.csv").write_text("t_start_seconds,flux_m_per_s\n0,-1e-7\n600,-2e-7\n")
        text = edited(COLUMN_CASE, "patch.top.type = flux\npatch.top.flux = -5e-7",
                      "patch.top.type = flux_series\npatch.top.series = rain.csv")
        with pytest.raises(ConfigurationError, match="covers"):
            SimulationPipeline(load_case(write_case(tmp_path, text)), settings=settings)

    def test_random_field_restricted_to_a_zone(self, tmp_path, settings):
        text = COLUMN_CASE + "soil.loam.region = layer 5 10\n" \
            "soil.sand.Ks = 1e-4\nsoil.sand.alpha = 14.5\nsoil.sand.n = 2.68\n" \
            "soil.sand.theta_s = 0.43\nsoil.sand.theta_r = 0.045\nsoil.sand.region = layer 0 5\n" \
            "random_field.seed = 3\nrandom_field.zone = loam\n"
        pipeline = SimulationPipeline(load_case(write_case(tmp_path, text)), settings=settings)
        ks = np.asarray(pipeline.soil.Ks)
        assert ks[:5].tolist() == [1e-4] * 5
        assert np.array_equal(ks[5:], lognormal_ks_field(10, seed=3)[5:])


class TestCli:

    def test_usage_errors(self, quiet_env):
        assert cli([]) == EXIT_USAGE
        assert cli(["bogus"]) == EXIT_USAGE
        assert cli(["run", "missing.case"]) == EXIT_USAGE
        assert cli(["partition-check", "missing.case", "--parts", "1,x"]) == EXIT_USAGE

    def test_invalid_case_is_a_usage_error(self, quiet_env):
        path = write_case(quiet_env, edited(COLUMN_CASE, "grid.cells = 1 1 10", "grid.cells = 1 1"))
        assert cli(["run", str(path)]) == EXIT_USAGE

    def test_successful_run(self, quiet_env):
        path = write_case(quiet_env)
        assert cli(["run", str(path), "--t-end", "1200"]) == EXIT_OK
        log = pd.read_csv(quiet_env / "runs" / "column" / "run_log.csv")
        assert log["t"].iloc[-1] == 1200.0

    def test_unrecoverable_step_exits_with_failure(self, quiet_env):
        text = COLUMN_CASE.replace("patch.top.type = flux\npatch.top.flux = -5e-7",
                                   "patch.top.type = dirichlet\npatch.top.head = 0.0")
        text = text.replace("numerics.tol_picard = 1e-6", "numerics.tol_picard = 1e-12")
        text = text.replace("numerics.pcg_tol = 1e-9", "numerics.pcg_tol = 1e-13")
        text = text.replace("numerics.dt_init = 60.0", "numerics.dt_init = 1.0")
        text = text.replace("numerics.dt_max = 600.0", "numerics.dt_max = 1.0")
        text += "numerics.dt_min = 1.0\nnumerics.max_picard_iters = 1\n"
        path = write_case(quiet_env, text, name="doomed")
        assert cli(["run", str(path)]) == EXIT_FAILURE
        out = quiet_env / "runs" / "doomed"
        assert len(pd.read_csv(out / "rejected_steps.csv")) == 1
        summary = json.loads((out / "run_summary.json").read_text())
        assert summary["run_info"]["status"] == "failed"
        assert "UnrecoverableStepError" in summary["error"]

    def test_too_few_threads_is_a_usage_error(self, quiet_env):
        path = write_case(quiet_env)
        assert cli(["run", str(path), "--parts", "2", "--threads", "1"]) == EXIT_USAGE
