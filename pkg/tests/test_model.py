"""Tests for the core data model."""

import pytest

from votecast.model import (
    NONVOTER_CODE,
    Constituency,
    Dataset,
    DeclarationState,
    PartySet,
    ValidationError,
    derive_nonvoters,
)


def make_parties():
    return PartySet.from_counted(ref_parties=("A", "B"), cur_parties=("A", "B", "C"))


def make_station(sid="s1", electorate=100, ref=(40, 30), cur=(35, 25, 10)):
    return Constituency.build(
        id=sid, name=sid.upper(), electorate_ref=electorate, electorate_cur=electorate,
        ref_votes=ref, cur_votes=cur)


class TestDeriveNonvoters:
    def test_appends_residual(self):
        assert derive_nonvoters((40, 30), 100) == (40, 30, 30)

    def test_zero_residual(self):
        assert derive_nonvoters((60, 40), 100) == (60, 40, 0)

    def test_overflow_rejected(self):
        with pytest.raises(ValidationError):
            derive_nonvoters((70, 40), 100)

    def test_negative_votes_rejected(self):
        with pytest.raises(ValidationError):
            derive_nonvoters((-1, 5), 100)


class TestPartySet:
    def test_from_counted_appends_nv(self):
        ps = make_parties()
        assert ps.ref_parties[-1] == NONVOTER_CODE
        assert ps.cur_parties[-1] == NONVOTER_CODE
        assert ps.n_ref == 3
        assert ps.n_cur == 4

    def test_nv_must_be_last(self):
        with pytest.raises(ValidationError):
            PartySet(ref_parties=(NONVOTER_CODE, "A"), cur_parties=("A", NONVOTER_CODE))

    def test_nv_required(self):
        with pytest.raises(ValidationError):
            PartySet(ref_parties=("A", "B"), cur_parties=("A", NONVOTER_CODE))

    def test_duplicate_party_rejected(self):
        with pytest.raises(ValidationError):
            PartySet.from_counted(ref_parties=("A", "A"), cur_parties=("B",))

    def test_nv_cannot_be_counted(self):
        with pytest.raises(ValidationError):
            PartySet.from_counted(ref_parties=("A", NONVOTER_CODE), cur_parties=("B",))


class TestConstituency:
    def test_build_derives_nv(self):
        st = make_station()
        assert st.ref_votes == (40, 30, 30)
        assert st.cur_votes == (35, 25, 10, 30)

    def test_votes_sum_to_electorate(self):
        st = make_station()
        assert sum(st.ref_votes) == st.electorate_ref
        assert sum(st.cur_votes) == st.electorate_cur

    def test_full_vector_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            Constituency(id="x", name="X", electorate_ref=100, electorate_cur=100,
                         ref_votes=(40, 30, 29))

    def test_undeclared_station_has_no_cur(self):
        st = Constituency.build(id="u", name="U", electorate_ref=50,
                                electorate_cur=60, ref_votes=(20, 10))
        assert st.cur_votes is None

    def test_declared_rank_positive(self):
        with pytest.raises(ValidationError):
            Constituency.build(id="r", name="R", electorate_ref=50, electorate_cur=50,
                               ref_votes=(20, 10), declared_rank=0)

    def test_electorate_positive(self):
        with pytest.raises(ValidationError):
            Constituency.build(id="z", name="Z", electorate_ref=0, electorate_cur=0,
                               ref_votes=())


def make_dataset():
    parties = make_parties()
    stations = (
        make_station("s1", 100, (40, 30), (35, 25, 10)),
        make_station("s2", 200, (80, 70), (60, 55, 25)),
        make_station("s3", 150, (50, 60), (45, 50, 20)),
    )
    return Dataset(parties=parties, constituencies=stations)


class TestDataset:
    def test_station_index(self):
        ds = make_dataset()
        assert ds.station_index["s2"] == 1
        assert ds.n_stations == 3

    def test_unique_ids_enforced(self):
        parties = make_parties()
        with pytest.raises(ValidationError):
            Dataset(parties=parties,
                    constituencies=(make_station("dup"), make_station("dup")))

    def test_needs_two_stations(self):
        with pytest.raises(ValidationError):
            Dataset(parties=make_parties(), constituencies=(make_station(),))

    def test_vote_length_must_match_parties(self):
        bad = Constituency(id="b", name="B", electorate_ref=100, electorate_cur=100,
                           ref_votes=(50, 50), cur_votes=(25, 25, 25, 25))
        with pytest.raises(ValidationError):
            Dataset(parties=make_parties(), constituencies=(make_station(), bad))

    def test_ref_matrix_shape_and_values(self):
        ds = make_dataset()
        assert ds.ref_matrix.shape == (3, 3)
        assert ds.ref_matrix[0].tolist() == [40, 30, 30]

    def test_true_totals(self):
        ds = make_dataset()
        assert ds.true_totals().tolist() == [140, 130, 55, 125]

    def test_true_totals_requires_full_cur(self):
        parties = make_parties()
        undecl = Constituency.build(id="u", name="U", electorate_ref=50,
                                    electorate_cur=50, ref_votes=(20, 10))
        ds = Dataset(parties=parties, constituencies=(make_station(), undecl))
        assert not ds.has_full_cur_votes
        with pytest.raises(ValidationError):
            ds.true_totals()

    def test_total_electorate(self):
        assert make_dataset().total_electorate_cur == 450


class TestDeclarationState:
    def test_from_dataset_collects_declared(self):
        ds = make_dataset()
        state = DeclarationState.from_dataset(ds)
        assert state.declared == {"s1", "s2", "s3"}
        assert state.votes["s1"] == (35, 25, 10, 30)

    def test_with_declaration_adds(self):
        ds = make_dataset()
        state = DeclarationState(declared=frozenset(), votes={})
        state2 = state.with_declaration("s1", (35, 25, 10, 30))
        assert state.declared == frozenset()
        assert state2.declared == {"s1"}

    def test_validate_against_checks_sum(self):
        ds = make_dataset()
        state = DeclarationState(declared=frozenset({"s1"}), votes={"s1": (35, 25, 10, 31)})
        with pytest.raises(ValidationError):
            state.validate_against(ds)

    def test_validate_against_checks_membership(self):
        ds = make_dataset()
        state = DeclarationState(declared=frozenset({"zz"}), votes={"zz": (1, 1, 1, 97)})
        with pytest.raises(ValidationError):
            state.validate_against(ds)

    def test_declared_needs_votes(self):
        with pytest.raises(ValidationError):
            DeclarationState(declared=frozenset({"s1"}), votes={})
