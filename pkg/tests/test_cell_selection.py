"""Camping rules, decoupled association, and coverage-level mapping."""

import pytest
from hypothesis import given, strategies as st

from nbsim.cell_selection import (
    Association,
    CellMeasure,
    CeLevel,
    ClassOffsetSelection,
    CoverageLevel,
    CoverageThresholds,
    DecoupledSelection,
    HybridSelection,
    PathLossBased,
    RsrpOnly,
    assign_coverage_level,
    associate,
    decoupled_association,
    escalate,
    measure_links,
    repetitions_for,
    select_cell,
)
from nbsim.radio import (
    LOCAL_AREA,
    WIDE_AREA,
    BaseStationClass,
    BsKind,
    Cell,
    LinkMeasure,
    Position,
    PropagationModel,
)

ORIGIN = Position(0.0, 0.0)


def make_measure(cell_id, rsrp, pl, kind=BsKind.WIDE_AREA):
    return CellMeasure(
        cell_id=cell_id,
        bs_class=BaseStationClass(kind),
        link=LinkMeasure(path_loss_db=pl, coupling_loss_db=pl, rsrp_dbm=rsrp),
    )


# The canonical two-cell situation: the macro is louder, the small cell
# is nearer (less path loss).
MACRO = make_measure("macro", rsrp=-65.0, pl=115.0)
SMALL = make_measure("small", rsrp=-71.0, pl=100.0, kind=BsKind.LOCAL_AREA)


measures_strategy = st.lists(
    st.builds(
        make_measure,
        cell_id=st.text(alphabet="abcdefgh", min_size=1, max_size=4),
        rsrp=st.floats(min_value=-140.0, max_value=-40.0),
        pl=st.floats(min_value=40.0, max_value=170.0),
        kind=st.sampled_from(list(BsKind)),
    ),
    min_size=1,
    max_size=8,
    unique_by=lambda m: m.cell_id,
)


class TestMeasureLinks:
    def test_single_cell_arithmetic(self):
        flat = PropagationModel(a=100.0, b=0.0)
        cell = Cell(
            id="c1",
            bs_class=WIDE_AREA,
            position=ORIGIN,
            nrs_power_dbm=24.0,
            antenna_gain_dbi=5.0,
            anchor_prb=0,
        )
        (m,) = measure_links(Position(500.0, 0.0), [cell], flat)
        assert m.cell_id == "c1"
        assert m.link.path_loss_db == pytest.approx(100.0)
        assert m.link.rsrp_dbm == pytest.approx(-71.0)
        # BS gain is recovered on the uplink: CL = PL - g_bs - g_ue.
        assert m.link.coupling_loss_db == pytest.approx(95.0)

    def test_empty_cell_list_rejected(self):
        with pytest.raises(ValueError):
            measure_links(ORIGIN, [])

    def test_colocated_identical_cells_measure_identically(self):
        kw = dict(bs_class=WIDE_AREA, position=Position(300.0, 0.0), nrs_power_dbm=30.0, anchor_prb=0)
        a, b = Cell(id="a", **kw), Cell(id="b", **kw)
        ma, mb = measure_links(ORIGIN, [a, b])
        assert ma.link == mb.link

    def test_shadowing_offsets_apply_per_cell(self):
        cell = Cell(
            id="c1", bs_class=WIDE_AREA, position=Position(1000.0, 0.0), nrs_power_dbm=30.0, anchor_prb=0
        )
        (base,) = measure_links(ORIGIN, [cell])
        (shadowed,) = measure_links(ORIGIN, [cell], shadowing_db={"c1": 7.5})
        assert shadowed.link.path_loss_db == pytest.approx(base.link.path_loss_db + 7.5)
        assert shadowed.link.rsrp_dbm == pytest.approx(base.link.rsrp_dbm - 7.5)

    def test_coupling_loss_floor_applies_inside_measures(self):
        cell = Cell(
            id="c1", bs_class=WIDE_AREA, position=Position(20.0, 0.0), nrs_power_dbm=30.0, anchor_prb=0
        )
        (m,) = measure_links(ORIGIN, [cell])
        assert m.link.coupling_loss_db == 70.0
        assert m.link.path_loss_db < 70.0


class TestSelectCell:
    def test_rsrp_only_picks_the_loudest(self):
        assert select_cell([MACRO, SMALL], RsrpOnly()) == "macro"

    def test_path_loss_picks_the_nearest(self):
        assert select_cell([MACRO, SMALL], PathLossBased()) == "small"

    def test_hybrid_in_normal_coverage_uses_path_loss(self):
        policy = HybridSelection(normal_coverage_rsrp_threshold_dbm=-80.0)
        assert select_cell([MACRO, SMALL], policy) == "small"

    def test_hybrid_outside_normal_coverage_falls_back_to_rsrp(self):
        policy = HybridSelection(normal_coverage_rsrp_threshold_dbm=-60.0)
        assert select_cell([MACRO, SMALL], policy) == "macro"

    def test_class_offsets_bias_toward_small_cells(self):
        policy = ClassOffsetSelection(offsets_db={BsKind.LOCAL_AREA: 45.0})
        assert select_cell([MACRO, SMALL], policy) == "small"
        assert select_cell([MACRO, SMALL], ClassOffsetSelection()) == "macro"

    def test_empty_measures_rejected(self):
        with pytest.raises(ValueError):
            select_cell([], RsrpOnly())

    def test_ties_break_toward_lowest_cell_id(self):
        twin_b = make_measure("b", rsrp=-70.0, pl=100.0)
        twin_a = make_measure("a", rsrp=-70.0, pl=100.0)
        for policy in (RsrpOnly(), PathLossBased(), ClassOffsetSelection()):
            assert select_cell([twin_b, twin_a], policy) == "a"

    @given(measures=measures_strategy, shift=st.floats(min_value=-30.0, max_value=30.0))
    def test_rsrp_argmax_invariant_under_common_shift(self, measures, shift):
        shifted = [
            make_measure(m.cell_id, m.link.rsrp_dbm + shift, m.link.path_loss_db, m.bs_class.kind)
            for m in measures
        ]
        assert select_cell(measures, RsrpOnly()) == select_cell(shifted, RsrpOnly())

    @given(measures=measures_strategy, shift=st.floats(min_value=-30.0, max_value=30.0))
    def test_path_loss_argmin_invariant_under_common_shift(self, measures, shift):
        shifted = [
            make_measure(m.cell_id, m.link.rsrp_dbm, m.link.path_loss_db + shift, m.bs_class.kind)
            for m in measures
        ]
        assert select_cell(measures, PathLossBased()) == select_cell(shifted, PathLossBased())

    @given(measures=measures_strategy)
    def test_hybrid_limits_collapse_to_pure_policies(self, measures):
        as_rsrp = HybridSelection(normal_coverage_rsrp_threshold_dbm=float("inf"))
        as_pl = HybridSelection(normal_coverage_rsrp_threshold_dbm=float("-inf"))
        assert select_cell(measures, as_rsrp) == select_cell(measures, RsrpOnly())
        assert select_cell(measures, as_pl) == select_cell(measures, PathLossBased())

    @given(measures=measures_strategy)
    def test_matches_brute_force_enumeration(self, measures):
        best_rsrp = min(measures, key=lambda m: (-m.link.rsrp_dbm, m.cell_id)).cell_id
        least_pl = min(measures, key=lambda m: (m.link.path_loss_db, m.cell_id)).cell_id
        assert select_cell(measures, RsrpOnly()) == best_rsrp
        assert select_cell(measures, PathLossBased()) == least_pl
        offs = {BsKind.LOCAL_AREA: 10.0, BsKind.HOME: 20.0}
        biased = min(
            measures,
            key=lambda m: (-(m.link.rsrp_dbm + offs.get(m.bs_class.kind, 0.0)), m.cell_id),
        ).cell_id
        assert select_cell(measures, ClassOffsetSelection(offsets_db=offs)) == biased


class TestDecoupledAssociation:
    def test_loud_macro_near_small_cell(self):
        assoc = decoupled_association([MACRO, SMALL])
        assert assoc == Association(dl_cell_id="macro", ul_cell_id="small")

    def test_single_cell_serves_both_directions(self):
        assoc = decoupled_association([MACRO])
        assert assoc.dl_cell_id == assoc.ul_cell_id == "macro"

    def test_empty_measures_rejected(self):
        with pytest.raises(ValueError):
            decoupled_association([])

    @given(measures=measures_strategy)
    def test_uplink_never_has_more_path_loss_than_downlink(self, measures):
        assoc = decoupled_association(measures)
        by_id = {m.cell_id: m for m in measures}
        assert (
            by_id[assoc.ul_cell_id].link.path_loss_db
            <= by_id[assoc.dl_cell_id].link.path_loss_db
        )

    @given(
        positions=st.lists(
            st.tuples(
                st.floats(min_value=-2000.0, max_value=2000.0),
                st.floats(min_value=-2000.0, max_value=2000.0),
            ),
            min_size=1,
            max_size=6,
            unique=True,
        )
    )
    def test_equal_powers_and_gains_collapse_to_one_cell(self, positions):
        cells = [
            Cell(
                id=f"c{i}",
                bs_class=WIDE_AREA,
                position=Position(x, y),
                nrs_power_dbm=30.0,
                anchor_prb=0,
            )
            for i, (x, y) in enumerate(positions)
        ]
        measures = measure_links(Position(37.0, 11.0), cells)
        assoc = decoupled_association(measures)
        assert assoc.dl_cell_id == assoc.ul_cell_id

    def test_associate_couples_unless_decoupled(self):
        for policy in (RsrpOnly(), PathLossBased(), ClassOffsetSelection()):
            assoc = associate([MACRO, SMALL], policy)
            assert assoc.dl_cell_id == assoc.ul_cell_id
        assoc = associate([MACRO, SMALL], DecoupledSelection())
        assert (assoc.dl_cell_id, assoc.ul_cell_id) == ("macro", "small")


class TestCoverageLevels:
    def test_threshold_table(self):
        t = CoverageThresholds()
        assert assign_coverage_level(120.0, t) == CoverageLevel(CeLevel.CE0, 1)
        assert assign_coverage_level(144.0, t) == CoverageLevel(CeLevel.CE0, 1)
        assert assign_coverage_level(144.01, t) == CoverageLevel(CeLevel.CE1, 8)
        assert assign_coverage_level(154.0, t) == CoverageLevel(CeLevel.CE1, 8)
        assert assign_coverage_level(164.0, t) == CoverageLevel(CeLevel.CE2, 32)
        assert assign_coverage_level(170.0, t) == CoverageLevel(CeLevel.OUT_OF_COVERAGE, None)

    def test_outermost_bound_is_the_served_limit(self):
        assert CoverageThresholds().max_coupling_loss_db == 164.0

    @given(
        cl1=st.floats(min_value=0.0, max_value=250.0),
        cl2=st.floats(min_value=0.0, max_value=250.0),
    )
    def test_monotone_in_coupling_loss(self, cl1, cl2):
        order = [CeLevel.CE0, CeLevel.CE1, CeLevel.CE2, CeLevel.OUT_OF_COVERAGE]
        lo, hi = sorted((cl1, cl2))
        t = CoverageThresholds()
        assert order.index(assign_coverage_level(lo, t).level) <= order.index(
            assign_coverage_level(hi, t).level
        )

    def test_bounds_must_increase(self):
        with pytest.raises(ValueError):
            CoverageThresholds(bounds_db=(154.0, 144.0, 164.0))

    def test_repetitions_must_not_decrease(self):
        with pytest.raises(ValueError):
            CoverageThresholds(repetitions=(8, 4, 32))
        with pytest.raises(ValueError):
            CoverageThresholds(repetitions=(0, 8, 32))

    def test_out_of_coverage_carries_no_repetitions(self):
        with pytest.raises(ValueError):
            CoverageLevel(CeLevel.OUT_OF_COVERAGE, 4)
        with pytest.raises(ValueError):
            CoverageLevel(CeLevel.CE1, None)

    def test_escalation_ladder(self):
        assert escalate(CeLevel.CE0) is CeLevel.CE1
        assert escalate(CeLevel.CE1) is CeLevel.CE2
        assert escalate(CeLevel.CE2) is CeLevel.CE2
        with pytest.raises(ValueError):
            escalate(CeLevel.OUT_OF_COVERAGE)

    def test_repetitions_for_levels(self):
        t = CoverageThresholds()
        assert repetitions_for(CeLevel.CE0, t) == 1
        assert repetitions_for(CeLevel.CE1, t) == 8
        assert repetitions_for(CeLevel.CE2, t) == 32
