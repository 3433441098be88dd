"""Cell state-machine semantics, including the enumeration and property
oracles for destruction, expiry, and mode-flush behavior."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amcsim.cell import (
    CellMode,
    CellState,
    DynamicDatum,
    EventKind,
    Tech,
    Trit,
    check_invariants,
    mode_is_legal,
    new_cell,
    read_dram_bit,
    read_sram_bit,
    read_sram_pulsed,
    read_trit,
    refresh_dynamic,
    set_cell_mode,
    write_dram_bit,
    write_sram_bit,
    write_trit,
)
from amcsim.errors import (
    EmptyCellError,
    ExpiredReadError,
    IllegalModeError,
    WrongModeError,
)

RET = 25_000.0  # dual-cell retention at 85C with -100 mV underdrive
RET7 = 4_000.0  # ternary retention at 85C


def kinds(events):
    return [e.kind for e in events]


class TestNewCell:
    @pytest.mark.parametrize(
        "tech,mode,legal",
        [
            (Tech.STD6T, CellMode.NORMAL, True),
            (Tech.STD6T, CellMode.AUGMENTED, False),
            (Tech.STD6T, CellMode.POWER_GATED, False),
            (Tech.AUG8T, CellMode.NORMAL, True),
            (Tech.AUG8T, CellMode.AUGMENTED, True),
            (Tech.AUG8T, CellMode.POWER_GATED, False),
            (Tech.AUG7T, CellMode.NORMAL, True),
            (Tech.AUG7T, CellMode.AUGMENTED, True),
            (Tech.AUG7T, CellMode.POWER_GATED, True),
        ],
    )
    def test_mode_legality(self, tech, mode, legal):
        assert mode_is_legal(tech, mode) is legal
        if legal:
            cell = new_cell(tech, mode)
            assert cell.static_bit is None and cell.dynamic is None
            check_invariants(cell)
        else:
            with pytest.raises(IllegalModeError):
                new_cell(tech, mode)


class TestSramPlane:
    def test_6t_write_read(self):
        cell = new_cell(Tech.STD6T, CellMode.NORMAL)
        cell, events = write_sram_bit(cell, 1, 0.0)
        assert cell.static_bit == 1 and not events
        bit, cell, events = read_sram_bit(cell, 5.0)
        assert bit == 1 and not events

    def test_read_empty_cell(self):
        cell = new_cell(Tech.AUG8T, CellMode.AUGMENTED)
        with pytest.raises(EmptyCellError):
            read_sram_bit(cell, 0.0)

    def test_7t_augmented_has_no_static_plane(self):
        cell = new_cell(Tech.AUG7T, CellMode.AUGMENTED)
        with pytest.raises(WrongModeError):
            write_sram_bit(cell, 1, 0.0)
        cell = new_cell(Tech.AUG7T, CellMode.POWER_GATED)
        with pytest.raises(WrongModeError):
            write_sram_bit(cell, 1, 0.0)

    def test_bad_bit_rejected(self):
        cell = new_cell(Tech.STD6T, CellMode.NORMAL)
        with pytest.raises(ValueError):
            write_sram_bit(cell, 2, 0.0)


class TestDualStorage:
    def make_dual(self, static=1, dram=0, t=0.0):
        cell = new_cell(Tech.AUG8T, CellMode.AUGMENTED)
        cell, _ = write_sram_bit(cell, static, t)
        cell = write_dram_bit(cell, dram, t, RET)
        return cell

    def test_both_bits_coexist(self):
        cell = self.make_dual(static=1, dram=0)
        assert cell.static_bit == 1
        assert cell.dynamic.payload == 0

    def test_dram_write_leaves_static_untouched(self):
        cell = self.make_dual(static=1, dram=0)
        cell = write_dram_bit(cell, 1, 10.0, RET)
        assert cell.static_bit == 1

    def test_dram_read_round_trip_at_zero_elapsed(self):
        cell = self.make_dual(dram=1)
        bit, cell, events = read_dram_bit(cell, 0.0)
        assert bit == 1 and not events

    def test_dram_read_nondestructive(self):
        cell = self.make_dual(dram=1)
        bit1, cell1, _ = read_dram_bit(cell, 100.0)
        bit2, cell2, _ = read_dram_bit(cell1, 200.0)
        assert bit1 == bit2 == 1
        assert cell1 == cell and cell2 == cell1  # no state change at all

    def test_sram_write_destroys_valid_dram(self):
        cell = self.make_dual(static=1, dram=1)
        cell, events = write_sram_bit(cell, 0, 10.0)
        assert cell.static_bit == 0 and cell.dynamic is None
        assert kinds(events) == [EventKind.DRAM_DESTROYED_BY_SRAM_ACCESS]

    def test_sram_read_destroys_valid_dram(self):
        cell = self.make_dual(static=1, dram=0)
        bit, cell, events = read_sram_bit(cell, 10.0)
        assert bit == 1 and cell.dynamic is None
        assert kinds(events) == [EventKind.DRAM_DESTROYED_BY_SRAM_ACCESS]

    def test_sram_access_on_expired_dram_is_silent(self):
        cell = self.make_dual(static=1, dram=0, t=0.0)
        bit, cell, events = read_sram_bit(cell, RET + 1)
        assert bit == 1 and cell.dynamic is None and not events

    def test_wrong_mode_dram_ops(self):
        cell = new_cell(Tech.AUG8T, CellMode.NORMAL)
        with pytest.raises(WrongModeError):
            write_dram_bit(cell, 1, 0.0, RET)
        with pytest.raises(WrongModeError):
            read_dram_bit(cell, 0.0)

    def test_dram_read_empty(self):
        cell = new_cell(Tech.AUG8T, CellMode.AUGMENTED)
        with pytest.raises(EmptyCellError):
            read_dram_bit(cell, 0.0)


class TestRetentionBoundary:
    def test_valid_just_inside_window(self):
        cell = write_dram_bit(
            new_cell(Tech.AUG8T, CellMode.AUGMENTED), 1, 0.0, RET
        )
        bit, _, _ = read_dram_bit(cell, 24_999.0)
        assert bit == 1

    def test_expired_at_and_past_window(self):
        cell = write_dram_bit(
            new_cell(Tech.AUG8T, CellMode.AUGMENTED), 1, 0.0, RET
        )
        for t in (25_000.0, 25_001.0):
            with pytest.raises(ExpiredReadError):
                read_dram_bit(cell, t)

    def test_silent_decay_reads_discharged_node(self):
        cell = write_dram_bit(
            new_cell(Tech.AUG8T, CellMode.AUGMENTED), 1, 0.0, RET
        )
        bit, after, events = read_dram_bit(cell, RET + 1, silent_decay=True)
        assert bit == 0
        assert kinds(events) == [EventKind.SILENT_DECAY_ALIAS]
        assert after == cell  # nothing restored

    @given(
        t_expire=st.floats(min_value=RET, max_value=10 * RET),
        t_later=st.floats(min_value=0.0, max_value=10 * RET),
    )
    def test_expiry_is_monotone(self, t_expire, t_later):
        datum = DynamicDatum(1, 0.0, RET)
        if not datum.is_valid(t_expire):
            assert not datum.is_valid(t_expire + t_later)


class TestPulsedRead:
    def test_normal_mode_copy_and_event(self):
        cell = new_cell(Tech.AUG8T, CellMode.NORMAL)
        cell, _ = write_sram_bit(cell, 1, 0.0)
        bit, after, events = read_sram_pulsed(cell, 5.0)
        assert bit == 1
        assert kinds(events) == [EventKind.PULSED_COPY_OVERWRITE]
        assert after.dynamic is None  # transient copy dropped

    def test_augmented_mode_refused_without_override(self):
        cell = new_cell(Tech.AUG8T, CellMode.AUGMENTED)
        cell, _ = write_sram_bit(cell, 1, 0.0)
        cell = write_dram_bit(cell, 0, 0.0, RET)
        with pytest.raises(WrongModeError):
            read_sram_pulsed(cell, 5.0)

    def test_override_enumeration(self):
        """State-machine oracle: all dynamic-plane pre-states for the
        augmented-mode pulsed read with the destroy override."""
        pre_dynamics = [
            None,
            DynamicDatum(0, 0.0, RET),
            DynamicDatum(1, 0.0, RET),
        ]
        for static in (0, 1):
            for datum in pre_dynamics:
                for now in (10.0, RET + 10.0):
                    cell = CellState(
                        Tech.AUG8T, CellMode.AUGMENTED, static, datum
                    )
                    bit, after, events = read_sram_pulsed(
                        cell, now, destroy_override=True
                    )
                    assert bit == static
                    assert after.dynamic is None
                    assert after.static_bit == static
                    was_live = datum is not None and datum.is_valid(now)
                    expected = (
                        [EventKind.DRAM_DESTROYED_BY_SRAM_ACCESS] if was_live else []
                    ) + [EventKind.PULSED_COPY_OVERWRITE]
                    assert kinds(events) == expected
                    check_invariants(after)

    def test_wrong_tech(self):
        cell = new_cell(Tech.STD6T, CellMode.NORMAL)
        cell, _ = write_sram_bit(cell, 1, 0.0)
        with pytest.raises(WrongModeError):
            read_sram_pulsed(cell, 1.0)


class TestRefresh:
    def test_timestamp_reset(self):
        cell = write_dram_bit(
            new_cell(Tech.AUG8T, CellMode.AUGMENTED), 1, 0.0, RET
        )
        cell = refresh_dynamic(cell, 0.8 * RET)
        assert cell.dynamic.written_at == 0.8 * RET
        assert cell.dynamic.cell_retention == RET
        bit, _, _ = read_dram_bit(cell, 0.8 * RET + 24_999.0)
        assert bit == 1

    def test_refresh_after_expiry_fails(self):
        cell = write_dram_bit(
            new_cell(Tech.AUG8T, CellMode.AUGMENTED), 1, 0.0, RET
        )
        with pytest.raises(ExpiredReadError):
            refresh_dynamic(cell, 1.1 * RET)

    def test_refresh_empty_fails(self):
        with pytest.raises(EmptyCellError):
            refresh_dynamic(new_cell(Tech.AUG8T, CellMode.AUGMENTED), 0.0)

    def test_chain_sustains_data_indefinitely(self):
        """Induction oracle: every 20 us gap is inside the 25 us window,
        so each refresh finds live data and restarts the window."""
        cell = write_dram_bit(
            new_cell(Tech.AUG8T, CellMode.AUGMENTED), 1, 0.0, RET
        )
        t = 0.0
        for _ in range(100):
            t += 20_000.0
            assert cell.dynamic.is_valid(t), "gap 20 us < retention 25 us"
            cell = refresh_dynamic(cell, t)
        bit, _, _ = read_dram_bit(cell, t + 20_000.0)
        assert bit == 1


class TestTernary:
    def make(self, trit, ret=RET7, t=0.0):
        cell = new_cell(Tech.AUG7T, CellMode.AUGMENTED)
        return write_trit(cell, trit, t, ret)

    def test_node_encoding(self):
        assert Trit.MINUS_ONE.nodes == (1, 0)
        assert Trit.ZERO.nodes == (0, 0)
        assert Trit.PLUS_ONE.nodes == (0, 1)

    @pytest.mark.parametrize("trit", list(Trit))
    def test_round_trip_identity(self, trit):
        cell = self.make(trit)
        value, _, events = read_trit(cell, 0.0)
        assert value is trit and not events

    def test_read_restores_window(self):
        cell = self.make(Trit.PLUS_ONE)
        _, cell, _ = read_trit(cell, 3_000.0)
        assert cell.dynamic.written_at == 3_000.0
        value, _, _ = read_trit(cell, 6_000.0)  # 3 us after restore
        assert value is Trit.PLUS_ONE

    @pytest.mark.parametrize("trit", [Trit.PLUS_ONE, Trit.MINUS_ONE])
    def test_expired_nonzero_aliases_to_zero(self, trit):
        cell = self.make(trit)
        with pytest.raises(ExpiredReadError):
            read_trit(cell, RET7 + 1)
        value, after, events = read_trit(cell, RET7 + 1, silent_decay=True)
        assert value is Trit.ZERO
        assert kinds(events) == [EventKind.SILENT_DECAY_ALIAS]
        assert after == cell

    def test_expired_zero_reads_zero_without_alias(self):
        cell = self.make(Trit.ZERO)
        value, after, events = read_trit(cell, RET7 + 1, silent_decay=True)
        assert value is Trit.ZERO and not events
        assert after == cell  # no restore; expiry stays monotone

    def test_wrong_mode(self):
        cell = new_cell(Tech.AUG7T, CellMode.NORMAL)
        with pytest.raises(WrongModeError):
            write_trit(cell, Trit.ZERO, 0.0, RET7)
        with pytest.raises(WrongModeError):
            read_trit(cell, 0.0)
        with pytest.raises(WrongModeError):
            write_trit(new_cell(Tech.STD6T, CellMode.NORMAL), Trit.ZERO, 0.0, RET7)


class TestModeChange:
    def test_8t_augmented_to_normal_flushes_dram_keeps_static(self):
        cell = new_cell(Tech.AUG8T, CellMode.AUGMENTED)
        cell, _ = write_sram_bit(cell, 1, 0.0)
        cell = write_dram_bit(cell, 0, 0.0, RET)
        cell, events = set_cell_mode(cell, CellMode.NORMAL, 10.0)
        assert cell.static_bit == 1 and cell.dynamic is None
        assert kinds(events) == [EventKind.MODE_FLUSH]
        check_invariants(cell)

    def test_expired_dram_flushes_silently(self):
        cell = write_dram_bit(
            new_cell(Tech.AUG8T, CellMode.AUGMENTED), 0, 0.0, RET
        )
        cell, events = set_cell_mode(cell, CellMode.NORMAL, RET + 1)
        assert cell.dynamic is None and not events

    def test_7t_normal_to_augmented_loses_static(self):
        cell = new_cell(Tech.AUG7T, CellMode.NORMAL)
        cell, _ = write_sram_bit(cell, 1, 0.0)
        cell, events = set_cell_mode(cell, CellMode.AUGMENTED, 5.0)
        assert cell.static_bit is None
        assert kinds(events) == [EventKind.MODE_FLUSH]
        check_invariants(cell)

    def test_7t_augmented_to_power_gated_flushes_trit(self):
        cell = write_trit(
            new_cell(Tech.AUG7T, CellMode.AUGMENTED), Trit.PLUS_ONE, 0.0, RET7
        )
        cell, events = set_cell_mode(cell, CellMode.POWER_GATED, 1.0)
        assert cell.dynamic is None and cell.static_bit is None
        assert kinds(events) == [EventKind.MODE_FLUSH]

    def test_noop_change(self):
        cell = new_cell(Tech.AUG8T, CellMode.AUGMENTED)
        cell = write_dram_bit(cell, 1, 0.0, RET)
        after, events = set_cell_mode(cell, CellMode.AUGMENTED, 5.0)
        assert after == cell and not events

    def test_illegal_target(self):
        cell = new_cell(Tech.AUG8T, CellMode.NORMAL)
        with pytest.raises(IllegalModeError):
            set_cell_mode(cell, CellMode.POWER_GATED, 0.0)


# ---------------------------------------------------------------- properties

bits = st.integers(min_value=0, max_value=1)


@given(
    b_static=bits,
    b_dyn=bits,
    gaps=st.lists(
        st.floats(min_value=0.0, max_value=RET / 8), min_size=3, max_size=3
    ),
)
def test_filo_sequence_returns_both_values(b_static, b_dyn, gaps):
    """W_sram; W_dram; R_dram; R_sram with every gap inside retention:
    both reads return what was written."""
    t = 0.0
    cell = new_cell(Tech.AUG8T, CellMode.AUGMENTED)
    cell, _ = write_sram_bit(cell, b_static, t)
    t += gaps[0]
    cell = write_dram_bit(cell, b_dyn, t, RET)
    t += gaps[1]
    got_dyn, cell, events = read_dram_bit(cell, t)
    assert got_dyn == b_dyn and not events
    t += gaps[2]
    got_static, cell, _ = read_sram_bit(cell, t)
    assert got_static == b_static


@given(
    ops=st.lists(
        st.sampled_from(["ws", "rs", "wd", "rd", "rf", "mode_n", "mode_a"]),
        max_size=30,
    ),
    data=st.data(),
)
@settings(max_examples=200)
def test_dual_storage_invariant_random_walk(ops, data):
    """Static and dynamic planes evolve independently under dynamic ops;
    static accesses leave no dynamic datum behind; invariants always hold."""
    cell = new_cell(Tech.AUG8T, CellMode.AUGMENTED)
    t = 0.0
    for op in ops:
        t += data.draw(st.floats(min_value=0.1, max_value=RET / 4))
        static_before = cell.static_bit
        try:
            if op == "ws":
                cell, _ = write_sram_bit(cell, data.draw(bits), t)
            elif op == "rs":
                _, cell, _ = read_sram_bit(cell, t)
            elif op == "wd":
                before = cell.static_bit
                cell = write_dram_bit(cell, data.draw(bits), t, RET)
                assert cell.static_bit == before
            elif op == "rd":
                before = cell
                _, cell, _ = read_dram_bit(cell, t)
                assert cell.static_bit == before.static_bit
            elif op == "rf":
                before = cell.static_bit
                cell = refresh_dynamic(cell, t)
                assert cell.static_bit == before
            elif op == "mode_n":
                cell, _ = set_cell_mode(cell, CellMode.NORMAL, t)
            elif op == "mode_a":
                cell, _ = set_cell_mode(cell, CellMode.AUGMENTED, t)
        except (EmptyCellError, ExpiredReadError, WrongModeError):
            pass
        else:
            if op in ("ws", "rs") and cell.mode is CellMode.AUGMENTED:
                assert cell.dynamic is None
        check_invariants(cell)


@given(
    ops=st.lists(
        st.sampled_from(["ws", "rs", "wt", "rt", "mode_n", "mode_a", "mode_p"]),
        max_size=30,
    ),
    data=st.data(),
)
@settings(max_examples=200)
def test_7t_mode_flush_soundness(ops, data):
    """No operation sequence can leave a 7T cell violating its mode's
    storage invariants."""
    cell = new_cell(Tech.AUG7T, CellMode.NORMAL)
    t = 0.0
    trits = st.sampled_from(list(Trit))
    for op in ops:
        t += data.draw(st.floats(min_value=0.1, max_value=RET7 / 2))
        try:
            if op == "ws":
                cell, _ = write_sram_bit(cell, data.draw(bits), t)
            elif op == "rs":
                _, cell, _ = read_sram_bit(cell, t)
            elif op == "wt":
                cell = write_trit(cell, data.draw(trits), t, RET7)
            elif op == "rt":
                _, cell, _ = read_trit(cell, t)
            elif op == "mode_n":
                cell, _ = set_cell_mode(cell, CellMode.NORMAL, t)
            elif op == "mode_a":
                cell, _ = set_cell_mode(cell, CellMode.AUGMENTED, t)
            elif op == "mode_p":
                cell, _ = set_cell_mode(cell, CellMode.POWER_GATED, t)
        except (EmptyCellError, ExpiredReadError, WrongModeError):
            pass
        check_invariants(cell)


@given(trit=st.sampled_from(list(Trit)), elapsed=st.floats(0.0, RET7 - 1.0))
def test_ternary_totality(trit, elapsed):
    cell = write_trit(
        new_cell(Tech.AUG7T, CellMode.AUGMENTED), trit, 0.0, RET7
    )
    value, _, _ = read_trit(cell, elapsed)
    assert value is trit


def test_operations_are_deterministic():
    """Same inputs, bit-identical states and events."""

    def walk():
        cell = new_cell(Tech.AUG8T, CellMode.AUGMENTED)
        log = []
        cell, ev = write_sram_bit(cell, 1, 1.0)
        log += ev
        cell = write_dram_bit(cell, 0, 2.0, RET)
        _, cell, ev = read_sram_pulsed(cell, 3.0, destroy_override=True)
        log += ev
        cell, ev = set_cell_mode(cell, CellMode.NORMAL, 4.0)
        log += ev
        return cell, tuple(log)

    assert walk() == walk()
