"""Transition estimation against hand-coded least-squares oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from votecast.model import Constituency, Dataset, DeclarationState, PartySet
from votecast.regression import (
    NoDeclaredStationsError,
    assemble_forecast,
    estimate_transition,
    global_transition,
    project_station,
    rmse,
    to_elec_shares,
    to_vald_shares,
)
from votecast.synth import SynthSpec, generate_synthetic


def normal_equation_oracle(design: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Independent minimum-norm least squares via the pseudo-inverse."""
    return np.linalg.pinv(design) @ target


def build_dataset(ref_rows, cur_rows, electorates):
    n_ref = len(ref_rows[0])
    n_cur = len(cur_rows[0])
    parties = PartySet(
        ref_parties=tuple(f"R{i}" for i in range(n_ref - 1)) + ("NV",),
        cur_parties=tuple(f"C{i}" for i in range(n_cur - 1)) + ("NV",),
    )
    stations = tuple(
        Constituency(
            id=f"s{i}", name=f"S{i}", electorate_ref=int(sum(r)),
            electorate_cur=int(e), ref_votes=tuple(r),
            cur_votes=tuple(c) if c is not None else None,
        )
        for i, (r, c, e) in enumerate(zip(ref_rows, cur_rows, electorates))
    )
    return Dataset(parties=parties, constituencies=stations)


class TestEstimateAgainstOracle:
    def test_two_party_exact_square_system(self):
        # two stations, two parties: the system is square and exactly solvable
        ref = [(60, 40), (30, 70)]
        cur = [(50, 50), (40, 60)]
        ds = build_dataset(ref, cur, [100, 100])
        decl = DeclarationState.from_dataset(ds)
        got = estimate_transition(ds, decl, ["s0", "s1"]).entries
        design = np.array(ref, dtype=float)
        target = np.array(cur, dtype=float)
        want = normal_equation_oracle(design, target).T
        assert np.allclose(got, want, atol=1e-8)
        assert np.allclose(design @ got.T, target, atol=1e-8)

    def test_overdetermined_three_stations(self):
        ref = [(60, 40), (30, 70), (55, 45)]
        cur = [(50, 50), (40, 60), (47, 53)]
        ds = build_dataset(ref, cur, [100, 100, 100])
        decl = DeclarationState.from_dataset(ds)
        got = estimate_transition(ds, decl, ["s0", "s1", "s2"]).entries
        want = normal_equation_oracle(
            np.array(ref, dtype=float), np.array(cur, dtype=float)
        ).T
        assert np.allclose(got, want, atol=1e-8)

    def test_rank_deficient_returns_minimum_norm(self):
        # identical stations: design rank 1, infinitely many solutions
        ref = [(50, 50), (50, 50)]
        cur = [(40, 60), (40, 60)]
        ds = build_dataset(ref, cur, [100, 100])
        decl = DeclarationState.from_dataset(ds)
        got = estimate_transition(ds, decl, ["s0", "s1"]).entries
        want = normal_equation_oracle(
            np.array(ref, dtype=float), np.array(cur, dtype=float)
        ).T
        assert np.allclose(got, want, atol=1e-8)
        fitted = np.array(ref, dtype=float) @ got.T
        assert np.allclose(fitted, np.array(cur, dtype=float), atol=1e-8)

    def test_residual_orthogonal_to_design(self):
        rng = np.random.default_rng(3)
        design = rng.uniform(10, 100, size=(8, 3))
        target = rng.uniform(10, 100, size=(8, 4))
        ref_rows = [tuple(int(v) for v in row) for row in design]
        cur_rows = [tuple(int(v) for v in row) for row in target]
        electorates = [sum(c) for c in cur_rows]
        ds = build_dataset(
            [r for r in ref_rows], [c for c in cur_rows], electorates
        )
        decl = DeclarationState.from_dataset(ds)
        coef = estimate_transition(ds, decl, [st.id for st in ds.constituencies]).entries
        d = ds.ref_matrix.astype(float)
        t = np.array(cur_rows, dtype=float)
        residual = t - d @ coef.T
        assert np.allclose(d.T @ residual, 0.0, atol=1e-6)

    def test_no_declared_members_raises(self):
        ref = [(60, 40), (30, 70)]
        cur = [(50, 50), (40, 60)]
        ds = build_dataset(ref, cur, [100, 100])
        empty = DeclarationState(declared=frozenset(), votes={})
        with pytest.raises(NoDeclaredStationsError):
            estimate_transition(ds, empty, ["s0", "s1"])

    def test_global_pools_all_declared(self):
        ref = [(60, 40), (30, 70), (55, 45)]
        cur = [(50, 50), (40, 60), None]
        ds = build_dataset(ref, cur, [100, 100, 100])
        decl = DeclarationState.from_dataset(ds)
        tm = global_transition(ds, decl)
        assert tm.group_id == "global"
        assert tm.n_stations_used == 2


class TestProjectStation:
    def square(self):
        ref = [(60, 40), (30, 70)]
        cur = [(50, 50), (40, 60)]
        ds = build_dataset(ref, cur, [100, 100])
        decl = DeclarationState.from_dataset(ds)
        return estimate_transition(ds, decl, ["s0", "s1"])

    def test_projection_sums_to_electorate(self):
        tm = self.square()
        proj = project_station(tm, (45, 55), 100)
        assert proj.sum() == pytest.approx(100.0)
        assert np.all(proj >= 0)
        assert np.all(proj <= 100)

    def test_negative_raw_components_clipped(self):
        entries = np.array([[2.0, 0.0], [-1.0, 0.5]])
        tm_entries = entries.copy()
        from votecast.regression import TransitionMatrix

        tm = TransitionMatrix(entries=tm_entries)
        proj = project_station(tm, (50, 50), 120)
        assert np.all(proj >= 0)
        assert proj.sum() == pytest.approx(120.0)
        # clipped negative stays zero after uniform rescale
        assert proj[1] == 0.0
        assert proj[0] == pytest.approx(120.0)

    def test_all_zero_projection_goes_to_nonvoters(self):
        from votecast.regression import TransitionMatrix

        tm = TransitionMatrix(entries=np.array([[-1.0, -1.0], [-2.0, -0.5]]))
        proj = project_station(tm, (50, 50), 80)
        assert proj.tolist() == [0.0, 80.0]

    def test_dimension_mismatch_rejected(self):
        tm = self.square()
        with pytest.raises(ValueError):
            project_station(tm, (1, 2, 3), 100)

    @given(
        e=st.integers(min_value=1, max_value=10_000),
        a=st.floats(min_value=-5, max_value=5, allow_nan=False),
        b=st.floats(min_value=-5, max_value=5, allow_nan=False),
        r1=st.integers(min_value=0, max_value=5_000),
        r2=st.integers(min_value=0, max_value=5_000),
    )
    @settings(max_examples=60, deadline=None)
    def test_projection_bounds_property(self, e, a, b, r1, r2):
        from votecast.regression import TransitionMatrix

        tm = TransitionMatrix(entries=np.array([[a, b], [b, a]]))
        proj = project_station(tm, (r1, r2), e)
        assert proj.shape == (2,)
        assert np.all(proj >= 0)
        assert np.all(proj <= e)
        assert proj.sum() == pytest.approx(e) or proj.sum() == 0.0


class TestAssembleForecast:
    def scenario(self):
        ds, labels, _ = generate_synthetic(
            SynthSpec(n_groups=2, stations_per_group=5, ref_party_count=2,
                      cur_party_count=2, noise_sd=0.0, seed=5)
        )
        declared = [st.id for st in ds.constituencies[:6]]
        decl = DeclarationState.from_dataset(ds, declared)
        return ds, labels, decl

    def test_declared_stations_pass_through_verbatim(self):
        ds, labels, decl = self.scenario()
        fc = assemble_forecast(ds, decl, labels)
        manual = np.zeros(ds.parties.n_cur)
        for sid in decl.declared:
            manual += np.array(decl.votes[sid], dtype=float)
        assert np.allclose(fc.declared_totals, manual)
        assert fc.declared_count == 6
        assert fc.undeclared_count == ds.n_stations - 6

    def test_totals_are_declared_plus_projected(self):
        ds, labels, decl = self.scenario()
        fc = assemble_forecast(ds, decl, labels)
        projected = sum(fc.station_projections.values())
        assert np.allclose(fc.party_totals, fc.declared_totals + projected)

    def test_empty_group_falls_back_to_global(self):
        ds, labels, decl = self.scenario()
        # give every station one label, then point one station at a group
        # whose members have not declared
        relabeled = [0] * ds.n_stations
        relabeled[-1] = 1
        declared = [st.id for st in ds.constituencies[:-1]]
        decl = DeclarationState.from_dataset(ds, declared)
        fc = assemble_forecast(ds, decl, relabeled)
        assert ds.constituencies[-1].id in fc.station_projections

    def test_pct_elec_sums_to_100(self):
        ds, labels, decl = self.scenario()
        fc = assemble_forecast(ds, decl, labels)
        assert fc.pct_elec().sum() == pytest.approx(100.0)
        assert fc.pct_vald().sum() == pytest.approx(100.0)
        assert len(fc.pct_vald()) == ds.parties.n_cur - 1

    def test_grouping_length_checked(self):
        ds, labels, decl = self.scenario()
        with pytest.raises(ValueError):
            assemble_forecast(ds, decl, labels[:-1])

    def test_json_dict_shape(self):
        ds, labels, decl = self.scenario()
        doc = assemble_forecast(ds, decl, labels).to_json_dict()
        assert set(doc) == {
            "cur_parties", "party_totals", "pct_elec", "pct_vald",
            "declared_count", "undeclared_count", "per_station",
        }
        assert doc["cur_parties"][-1] == "NV"
        assert len(doc["party_totals"]) == len(doc["cur_parties"])
        assert sorted(doc["per_station"]) == list(doc["per_station"])


class TestShareAndError:
    def test_elec_shares_include_nonvoters(self):
        shares = to_elec_shares([30, 20, 50])
        assert shares.tolist() == [30.0, 20.0, 50.0]

    def test_vald_shares_drop_nonvoters(self):
        shares = to_vald_shares([30, 20, 50])
        assert shares.tolist() == [60.0, 40.0]

    def test_zero_valid_votes_raise(self):
        with pytest.raises(ValueError):
            to_vald_shares([0, 0, 10])
        with pytest.raises(ValueError):
            to_elec_shares([0, 0, 0])

    def test_rmse_abs_matches_hand_value(self):
        got = rmse([10.0, 20.0], [13.0, 16.0])
        assert got == pytest.approx(np.sqrt((9 + 16) / 2))

    def test_rmse_elec_uses_shares(self):
        got = rmse([30, 20, 50], [20, 30, 50], metric="elec")
        assert got == pytest.approx(np.sqrt((100 + 100 + 0) / 3))

    def test_rmse_vald_excludes_nonvoters(self):
        got = rmse([30, 20, 50], [20, 30, 50], metric="vald")
        assert got == pytest.approx(20.0)

    def test_rmse_unknown_metric(self):
        with pytest.raises(ValueError):
            rmse([1.0], [1.0], metric="pct")

    def test_rmse_shape_mismatch(self):
        with pytest.raises(ValueError):
            rmse([1.0, 2.0], [1.0])
