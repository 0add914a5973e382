"""Deployment wiring rules, broadcasts, random access, and redirects."""

import re

import numpy as np
import pytest

from nbsim.architecture import (
    ArchitectureKind,
    AttachParams,
    Connected,
    Failed,
    Msg4Decision,
    PreambleReport,
    Topology,
    TraceEvent,
    attach,
    build_broadcast,
    format_event,
    format_trace,
    msg4_redirect,
    preamble_report,
    validate_topology,
)
from nbsim.cell_selection import (
    CeLevel,
    DecoupledSelection,
    PathLossBased,
    RsrpOnly,
)
from nbsim.radio import (
    LOCAL_AREA,
    WIDE_AREA,
    Cell,
    CellRole,
    Position,
    PropagationModel,
    home_class,
)

ORIGIN = Position(0.0, 0.0)


def macro(**kw):
    base = dict(
        id="macro-0",
        bs_class=WIDE_AREA,
        position=ORIGIN,
        nrs_power_dbm=32.0,
        antenna_gain_dbi=15.0,
        cell_identity=7,
        anchor_prb=0,
        s1=True,
    )
    base.update(kw)
    return Cell(**base)


def pico(**kw):
    base = dict(
        id="pico-0",
        bs_class=LOCAL_AREA,
        position=Position(300.0, 0.0),
        nrs_power_dbm=13.0,
        antenna_gain_dbi=5.0,
        cell_identity=7,
        role=CellRole.NON_ANCHOR,
        non_anchor_prbs=(4,),
        x2=("macro-0",),
    )
    base.update(kw)
    return Cell(**base)


def independent_topology():
    return Topology(
        cells=(macro(), pico(role=CellRole.ANCHOR, anchor_prb=1, x2=(), s1=True)),
        kind=ArchitectureKind.INDEPENDENT,
    )


def anchored_topology(**pico_kw):
    return Topology(cells=(macro(), pico(**pico_kw)), kind=ArchitectureKind.ANCHORED)


def shared_topology(**pico_kw):
    return Topology(cells=(macro(), pico(**pico_kw)), kind=ArchitectureKind.SHARED_IDENTITY)


class TestTopologyBasics:
    def test_empty_topology_rejected(self):
        with pytest.raises(ValueError):
            Topology(cells=(), kind=ArchitectureKind.INDEPENDENT)

    def test_lookup_and_anchor_listing(self):
        t = anchored_topology()
        assert t.by_id["pico-0"].id == "pico-0"
        assert [c.id for c in t.anchors] == ["macro-0"]

    def test_sideband_links_are_undirected(self):
        t = anchored_topology()
        assert t.x2_links == frozenset({("macro-0", "pico-0")})
        assert [c.id for c in t.x2_peers("macro-0")] == ["pico-0"]
        assert [c.id for c in t.x2_peers("pico-0")] == ["macro-0"]


class TestValidateTopology:
    def test_clean_topologies_pass(self):
        for t in (independent_topology(), anchored_topology(), shared_topology()):
            assert validate_topology(t) == []

    def rules_of(self, t):
        return {v.rule for v in validate_topology(t)}

    def test_duplicate_cell_id(self):
        t = Topology(
            cells=(macro(), macro(position=Position(900.0, 0.0))),
            kind=ArchitectureKind.INDEPENDENT,
        )
        assert "duplicate-cell-id" in self.rules_of(t)

    def test_x2_self_peer(self):
        t = Topology(
            cells=(macro(x2=("macro-0",)),), kind=ArchitectureKind.INDEPENDENT
        )
        assert "x2-self-peer" in self.rules_of(t)

    def test_unknown_x2_peer(self):
        t = Topology(cells=(macro(x2=("ghost",)),), kind=ArchitectureKind.INDEPENDENT)
        assert "unknown-x2-peer" in self.rules_of(t)

    def test_independent_cell_without_core_link(self):
        t = Topology(cells=(macro(s1=False),), kind=ArchitectureKind.INDEPENDENT)
        assert "independent-missing-s1" in self.rules_of(t)

    def test_independent_cell_not_broadcasting(self):
        t = Topology(
            cells=(macro(), pico(s1=True)), kind=ArchitectureKind.INDEPENDENT
        )
        assert "independent-not-broadcasting" in self.rules_of(t)

    def test_anchored_anchor_without_core_link(self):
        t = Topology(cells=(macro(s1=False), pico()), kind=ArchitectureKind.ANCHORED)
        assert "anchored-anchor-missing-s1" in self.rules_of(t)

    def test_anchored_non_anchor_with_core_link(self):
        assert "anchored-non-anchor-has-s1" in self.rules_of(anchored_topology(s1=True))

    def test_anchored_non_anchor_without_sideband(self):
        assert "anchored-non-anchor-missing-x2" in self.rules_of(anchored_topology(x2=()))

    def test_shared_macro_not_broadcasting(self):
        t = Topology(
            cells=(macro(role=CellRole.NON_ANCHOR, anchor_prb=None, x2=("pico-0",)), pico()),
            kind=ArchitectureKind.SHARED_IDENTITY,
        )
        assert "shared-macro-not-broadcasting" in self.rules_of(t)

    def test_shared_macro_without_core_link(self):
        t = Topology(cells=(macro(s1=False), pico()), kind=ArchitectureKind.SHARED_IDENTITY)
        assert "shared-macro-missing-s1" in self.rules_of(t)

    def test_shared_small_cell_broadcasting(self):
        t = shared_topology(role=CellRole.ANCHOR, anchor_prb=2, non_anchor_prbs=())
        assert "shared-small-cell-broadcasts" in self.rules_of(t)

    def test_shared_small_cell_with_core_link(self):
        assert "shared-small-cell-has-s1" in self.rules_of(shared_topology(s1=True))

    def test_shared_small_cell_without_sideband(self):
        assert "shared-small-cell-missing-x2" in self.rules_of(shared_topology(x2=()))

    def test_shared_identity_mismatch(self):
        t = shared_topology(cell_identity=9)
        violations = validate_topology(t)
        assert any(
            v.rule == "shared-identity-mismatch" and v.cell_ids == ("pico-0", "macro-0")
            for v in violations
        )

    def test_each_mutant_breaks_exactly_the_expected_rule(self):
        # A mutant must not drown the signal in unrelated violations.
        t = anchored_topology(x2=())
        assert [v.rule for v in validate_topology(t)] == ["anchored-non-anchor-missing-x2"]


class TestBroadcast:
    def test_contents(self):
        t = anchored_topology(selection_threshold_dbm=-118.0, frequency_index=2)
        info = build_broadcast(t.by_id["macro-0"], t)
        assert info.source_cell_id == "macro-0"
        assert info.anchor_ids == ("macro-0",)
        (entry,) = info.non_anchors
        assert entry.cell_id == "pico-0"
        assert entry.frequency_index == 2
        assert entry.nrs_power_dbm == 13.0
        assert entry.selection_threshold_dbm == -118.0

    def test_only_anchored_deployments_broadcast_lists(self):
        t = independent_topology()
        with pytest.raises(ValueError):
            build_broadcast(t.by_id["macro-0"], t)

    def test_non_anchor_cannot_broadcast(self):
        t = anchored_topology()
        with pytest.raises(ValueError):
            build_broadcast(t.by_id["pico-0"], t)


TRACE_LINE = re.compile(
    r"^t=\d+ ue=\S+ [A-Z_]+ cell=(\S+|-) rsrp=(-?\d+\.\d\d|-) pl=(-?\d+\.\d\d|-)"
    r"( reason=\w+)?$"
)


class TestTraceFormat:
    def test_idle_line_uses_placeholders(self):
        e = TraceEvent(0, "ue-0001", "IDLE")
        assert format_event(e) == "t=0 ue=ue-0001 IDLE cell=- rsrp=- pl=-"

    def test_values_use_two_decimals(self):
        e = TraceEvent(3, "ue-0001", "MEASURE", "macro-0", -80.071, 127.346)
        assert format_event(e) == "t=3 ue=ue-0001 MEASURE cell=macro-0 rsrp=-80.07 pl=127.35"

    def test_failed_line_carries_reason(self):
        e = TraceEvent(5, "u", "FAILED", "c", -90.0, 150.0, reason="rach_failed")
        assert format_event(e).endswith(" reason=rach_failed")

    def test_format_trace_emits_one_line_per_event(self):
        events = [TraceEvent(0, "u", "IDLE"), TraceEvent(1, "u", "FAILED", reason="x")]
        text = format_trace(events)
        assert text == "t=0 ue=u IDLE cell=- rsrp=- pl=-\nt=1 ue=u FAILED cell=- rsrp=- pl=- reason=x\n"


def labels(result):
    return [e.label for e in result.events]


class TestIndependentAttach:
    def test_happy_path_sequence(self):
        t = Topology(cells=(macro(),), kind=ArchitectureKind.INDEPENDENT)
        r = attach("ue-0", Position(500.0, 0.0), t, RsrpOnly(), AttachParams())
        assert isinstance(r.state, Connected)
        assert labels(r) == [
            "IDLE",
            "MEASURE",
            "SYNCHRONIZED",
            "BROADCAST_ACQUIRED",
            "RACH_IN_PROGRESS",
            "GRANTED",
            "CONNECTED",
        ]
        assert r.association.dl_cell_id == r.association.ul_cell_id == "macro-0"
        assert r.coverage.level is CeLevel.CE0
        assert r.rach_attempts == 1
        for e in r.events:
            assert TRACE_LINE.match(format_event(e)), format_event(e)

    def test_event_times_count_up_from_zero(self):
        t = Topology(cells=(macro(),), kind=ArchitectureKind.INDEPENDENT)
        r = attach("ue-0", Position(500.0, 0.0), t, RsrpOnly(), AttachParams())
        assert [e.t for e in r.events] == list(range(len(r.events)))

    def test_out_of_coverage(self):
        t = Topology(cells=(macro(),), kind=ArchitectureKind.INDEPENDENT)
        r = attach("ue-0", Position(25_000.0, 0.0), t, RsrpOnly(), AttachParams())
        assert r.state == Failed("out_of_coverage")
        assert labels(r)[-1] == "FAILED"
        assert r.events[-1].reason == "out_of_coverage"
        assert r.association is None and r.coverage is None

    def test_random_access_failure_exhausts_attempts(self):
        t = Topology(cells=(macro(),), kind=ArchitectureKind.INDEPENDENT)
        # Coupling loss ~155 dB: in coverage, but raw preamble SNR stays
        # below the detection threshold at every level.
        r = attach("ue-0", Position(13_000.0, 0.0), t, RsrpOnly(), AttachParams())
        assert r.state == Failed("rach_failed")
        assert r.rach_attempts == 3
        assert labels(r).count("RACH_IN_PROGRESS") == 3
        assert r.events[-1].reason == "rach_failed"
        assert r.rach_target == "macro-0"

    def test_decoupled_association_rachs_on_the_uplink_cell(self):
        t = Topology(
            cells=(macro(), pico(role=CellRole.ANCHOR, anchor_prb=1, x2=(), s1=True)),
            kind=ArchitectureKind.INDEPENDENT,
        )
        # At 250 m the macro is still the loudest downlink, but the pico has
        # the smaller path loss, so the association splits.
        r = attach("ue-0", Position(250.0, 0.0), t, DecoupledSelection(), AttachParams())
        assert isinstance(r.state, Connected)
        assert r.association.dl_cell_id == "macro-0"
        assert r.association.ul_cell_id == "pico-0"
        rach_events = [e for e in r.events if e.label == "RACH_IN_PROGRESS"]
        assert all(e.cell_id == "pico-0" for e in rach_events)
        assert "REDIRECT" not in labels(r)

    def test_attach_params_validate(self):
        with pytest.raises(ValueError):
            AttachParams(max_rach_attempts=0)


class TestAnchoredAttach:
    def test_measures_advertised_cells_before_random_access(self):
        t = anchored_topology()
        r = attach("ue-0", Position(290.0, 0.0), t, PathLossBased(), AttachParams())
        seq = labels(r)
        assert isinstance(r.state, Connected)
        # The non-anchor is discovered through the broadcast, so its
        # measurement must land between the broadcast and random access.
        pico_measure = next(
            i for i, e in enumerate(r.events) if e.label == "MEASURE" and e.cell_id == "pico-0"
        )
        assert seq.index("BROADCAST_ACQUIRED") < pico_measure < seq.index("RACH_IN_PROGRESS")

    def test_grant_rides_the_sideband_to_the_anchor(self):
        t = anchored_topology()
        r = attach("ue-0", Position(290.0, 0.0), t, PathLossBased(), AttachParams())
        assert r.association.ul_cell_id == "pico-0"
        granted = next(e for e in r.events if e.label == "GRANTED")
        assert granted.cell_id == "macro-0"

    def test_anchor_grant_stays_local_when_anchor_serves(self):
        t = anchored_topology()
        r = attach("ue-0", Position(10.0, 0.0), t, PathLossBased(), AttachParams())
        assert r.association.ul_cell_id == "macro-0"
        granted = next(e for e in r.events if e.label == "GRANTED")
        assert granted.cell_id == "macro-0"

    def test_rach_resources_come_from_the_advertised_prbs(self):
        t = anchored_topology()
        rng = np.random.default_rng(7)
        r = attach("ue-0", Position(290.0, 0.0), t, PathLossBased(), AttachParams(), rng=rng)
        assert r.rach_resources is not None
        assert r.rach_resources.prb == 4
        assert 0 <= r.rach_resources.subcarrier < 12
        assert 0 <= r.rach_resources.time_slot < 40

    def test_selection_threshold_excludes_weak_non_anchor(self):
        t = anchored_topology(selection_threshold_dbm=-30.0)
        r = attach("ue-0", Position(290.0, 0.0), t, PathLossBased(), AttachParams())
        assert isinstance(r.state, Connected)
        assert r.association.ul_cell_id == "macro-0"

    def test_deterministic_given_equal_rngs(self):
        t = anchored_topology()
        r1 = attach(
            "ue-0", Position(290.0, 0.0), t, PathLossBased(), AttachParams(),
            rng=np.random.default_rng(11),
        )
        r2 = attach(
            "ue-0", Position(290.0, 0.0), t, PathLossBased(), AttachParams(),
            rng=np.random.default_rng(11),
        )
        assert r1 == r2


class TestSharedIdentityAttach:
    def test_random_access_always_targets_the_macro(self):
        t = shared_topology()
        for x in (10.0, 150.0, 295.0, 600.0):
            r = attach("ue-0", Position(x, 0.0), t, RsrpOnly(), AttachParams())
            rach_events = [e for e in r.events if e.label == "RACH_IN_PROGRESS"]
            assert rach_events and all(e.cell_id == "macro-0" for e in rach_events)
            assert r.rach_target == "macro-0"

    def test_nearby_ue_is_redirected_at_the_final_message(self):
        t = shared_topology()
        r = attach("ue-0", Position(295.0, 0.0), t, RsrpOnly(), AttachParams())
        assert isinstance(r.state, Connected)
        assert r.redirected is True
        assert "REDIRECT" in labels(r)
        assert r.association.dl_cell_id == r.association.ul_cell_id == "pico-0"
        redirect = next(e for e in r.events if e.label == "REDIRECT")
        assert redirect.cell_id == "pico-0"

    def test_coverage_level_follows_the_redirect_target(self):
        t = shared_topology()
        r = attach("ue-0", Position(295.0, 0.0), t, RsrpOnly(), AttachParams())
        assert r.coverage.level is CeLevel.CE0

    def test_distant_ue_stays_on_the_macro(self):
        t = shared_topology()
        r = attach("ue-0", Position(-500.0, 0.0), t, RsrpOnly(), AttachParams())
        assert isinstance(r.state, Connected)
        assert r.redirected is False
        assert "REDIRECT" not in labels(r)
        assert r.association.ul_cell_id == "macro-0"

    def test_high_redirect_threshold_disables_handover(self):
        t = shared_topology()
        r = attach(
            "ue-0",
            Position(295.0, 0.0),
            t,
            RsrpOnly(),
            AttachParams(msg4_redirect_snr_db=200.0),
        )
        assert r.redirected is False
        assert r.association.ul_cell_id == "macro-0"

    def test_selection_policy_is_ignored(self):
        t = shared_topology()
        pos = Position(295.0, 0.0)
        a = attach("ue-0", pos, t, RsrpOnly(), AttachParams())
        b = attach("ue-0", pos, t, PathLossBased(), AttachParams())
        assert a == b


class TestPreambleReports:
    def _listener(self, pl_db):
        return pico(
            position=Position(10_000.0, 0.0),
            propagation=PropagationModel(a=pl_db, b=0.0),
            antenna_gain_dbi=0.0,
        )

    def test_strong_preamble_is_received_with_its_snr(self):
        t = shared_topology()
        report = preamble_report(self._listener(80.0), "ue-0", ORIGIN, 23.0, t)
        assert report.received is True
        assert report.measured_ul_snr_db == pytest.approx(64.45, abs=0.01)

    def test_weak_preamble_is_not_received(self):
        t = shared_topology()
        report = preamble_report(self._listener(150.0), "ue-0", ORIGIN, 23.0, t)
        assert report.received is False
        assert report.measured_ul_snr_db is None

    def test_only_shared_identity_deployments_report(self):
        t = anchored_topology()
        with pytest.raises(ValueError):
            preamble_report(self._listener(80.0), "ue-0", ORIGIN, 23.0, t)

    def test_report_invariants(self):
        with pytest.raises(ValueError):
            PreambleReport("c", "u", received=True, measured_ul_snr_db=None)
        with pytest.raises(ValueError):
            PreambleReport("c", "u", received=False, measured_ul_snr_db=3.0)

    def test_msg4_rule(self):
        hit = PreambleReport("c", "u", received=True, measured_ul_snr_db=5.0)
        assert msg4_redirect(hit, 0.0) is Msg4Decision.REDIRECT_TO_SMALL_CELL
        assert msg4_redirect(hit, 5.0) is Msg4Decision.REDIRECT_TO_SMALL_CELL
        assert msg4_redirect(hit, 5.1) is Msg4Decision.STAY
        miss = PreambleReport("c", "u", received=False, measured_ul_snr_db=None)
        assert msg4_redirect(miss, -100.0) is Msg4Decision.STAY
