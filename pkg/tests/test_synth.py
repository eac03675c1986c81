"""Synthetic election generator tests."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from votecast.model import ValidationError
from votecast.synth import MIX_DENOMINATOR, SynthSpec, _apportion, generate_synthetic


def small_spec(**overrides):
    base = dict(n_groups=2, stations_per_group=4, ref_party_count=2,
                cur_party_count=3, noise_sd=0.0, seed=9)
    base.update(overrides)
    return SynthSpec(**base)


class TestApportion:
    def test_exact_total_preserved(self):
        out = _apportion(np.array([1.0, 1.0, 1.0]), 10)
        assert out.sum() == 10
        assert sorted(out.tolist()) == [3, 3, 4]

    def test_all_zero_weights_go_to_last(self):
        out = _apportion(np.array([0.0, 0.0, 0.0]), 7)
        assert out.tolist() == [0, 0, 7]

    @given(
        weights=st.lists(st.floats(min_value=0, max_value=1000, allow_nan=False),
                         min_size=1, max_size=8),
        total=st.integers(min_value=0, max_value=100_000),
    )
    @settings(max_examples=80, deadline=None)
    def test_sum_and_nonnegativity_property(self, weights, total):
        out = _apportion(np.array(weights), total)
        assert out.sum() == total
        assert np.all(out >= 0)


class TestGenerateSynthetic:
    def test_shapes_and_label_range(self):
        ds, labels, mats = generate_synthetic(small_spec())
        assert ds.n_stations == 8
        assert len(labels) == 8
        assert set(labels) <= set(range(2))
        assert len(mats) == 2
        assert mats[0].entries.shape == (4, 3)  # cur+NV rows, ref+NV cols

    def test_matrices_are_column_stochastic_dyadic(self):
        _, _, mats = generate_synthetic(small_spec())
        for tm in mats:
            cols = tm.entries.sum(axis=0)
            assert np.all(cols == 1.0)
            scaled = tm.entries * MIX_DENOMINATOR
            assert np.allclose(scaled, np.round(scaled))
            assert np.all(scaled >= 1)

    def test_electorates_snap_to_denominator_multiples(self):
        ds, _, _ = generate_synthetic(small_spec())
        for stn in ds.constituencies:
            assert stn.electorate_ref % MIX_DENOMINATOR == 0
            assert stn.electorate_cur % MIX_DENOMINATOR == 0

    def test_noiseless_votes_are_exact_matrix_product(self):
        ds, labels, mats = generate_synthetic(small_spec())
        for stn, g in zip(ds.constituencies, labels):
            ref = np.asarray(stn.ref_votes, dtype=float)
            exact = mats[g].entries @ ref
            assert np.allclose(exact, np.asarray(stn.cur_votes, dtype=float),
                               atol=1e-9)
            assert np.allclose(exact, np.round(exact))

    def test_votes_are_valid_integers(self):
        ds, _, _ = generate_synthetic(small_spec(noise_sd=5.0))
        for stn in ds.constituencies:
            assert all(isinstance(v, int) for v in stn.cur_votes)
            assert min(stn.cur_votes) >= 0
            assert sum(stn.cur_votes) == stn.electorate_cur

    def test_same_seed_same_dataset(self):
        a = generate_synthetic(small_spec(noise_sd=3.0))
        b = generate_synthetic(small_spec(noise_sd=3.0))
        assert a[0] == b[0]
        assert a[1] == b[1]

    def test_different_seed_differs(self):
        a, _, _ = generate_synthetic(small_spec())
        b, _, _ = generate_synthetic(small_spec(seed=10))
        assert a != b

    def test_station_and_party_naming(self):
        ds, _, _ = generate_synthetic(small_spec())
        assert ds.constituencies[0].id == "st0000"
        assert ds.parties.ref_parties[:-1] == ("P1", "P2")
        assert ds.parties.cur_parties[:-1] == ("C1", "C2", "C3")

    def test_every_group_has_stations(self):
        _, labels, _ = generate_synthetic(small_spec(n_groups=3, stations_per_group=5))
        assert set(labels) == {0, 1, 2}
        assert labels.count(0) == 5

    def test_spec_validation(self):
        with pytest.raises(ValidationError):
            SynthSpec(n_groups=0, stations_per_group=4, ref_party_count=2,
                      cur_party_count=2)
        with pytest.raises(ValidationError):
            SynthSpec(n_groups=1, stations_per_group=1, ref_party_count=2,
                      cur_party_count=2)
        with pytest.raises(ValidationError):
            small_spec(noise_sd=-1.0)
        with pytest.raises(ValidationError):
            small_spec(electorate_range=(0, 10))

    def test_party_count_capped_by_grid(self):
        with pytest.raises(ValidationError):
            generate_synthetic(small_spec(cur_party_count=MIX_DENOMINATOR))
