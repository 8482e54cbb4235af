"""Unit semantics of the anonymous-counting register, hand-stepped.

The expected values in these tests were derived by executing the read and
write step sequences (R1..R5, W1..W3, I1) by hand from the initial state.
"""

import pytest

from arcreg import (
    ArcRegister,
    CapacityError,
    ConfigurationError,
    decode_versioned,
    encode_versioned,
    pack,
    unpack,
)
from arcreg.arc import NO_PROPOSAL


def make(n_readers=2, max_size=4096, initial_seq=0, debug=False):
    return ArcRegister(
        encode_versioned(initial_seq, max_size), n_readers, max_size, debug=debug
    )


# -- packed word ------------------------------------------------------------


def test_pack_index_zero_contributes_nothing():
    assert pack(0, 4) == 4


def test_unpack_splits_fields():
    assert unpack((3 << 32) | 7) == (3, 7)


def test_pack_counter_zero_is_pure_shift():
    assert pack(5, 0) == 5 << 32


def test_pack_unpack_round_trip():
    for idx, ctr in [(0, 0), (1, 2**32 - 1), (2**32 - 1, 0), (123, 456)]:
        assert unpack(pack(idx, ctr)) == (idx, ctr)


# -- initialization ---------------------------------------------------------


def test_init_state_two_readers():
    reg = make(n_readers=2)
    assert len(reg._slots) == 4
    assert reg._current.load() == 2  # I1: index 0, counter N
    assert reg._proposal == NO_PROPOSAL
    assert all(s.r_start == 0 and s.r_end.load() == 0 for s in reg._slots)
    assert reg._slots[0].size == 4096


def test_init_state_smallest_legal_n():
    reg = ArcRegister(encode_versioned(0, 64), 1, 64)
    assert len(reg._slots) == 3
    assert reg._current.load() == 1


def test_fresh_reader_reads_initial_value_with_zero_rmw():
    reg = make()
    reader = reg.new_reader()
    buf, size = reader.read()
    assert decode_versioned(buf, size) == (0, True)
    assert reg.rmw_counters() == (0, 0)  # R2 path only


def test_reader_count_capacity():
    reg = make(n_readers=2)
    reg.new_reader()
    reg.new_reader()
    with pytest.raises(CapacityError):
        reg.new_reader()


def test_single_writer_handle():
    reg = make()
    reg.writer()
    with pytest.raises(CapacityError):
        reg.writer()


@pytest.mark.parametrize("n", [0, 2**32 - 1])
def test_reader_count_bounds(n):
    with pytest.raises(CapacityError):
        ArcRegister(b"\x00" * 8, n, 64)


def test_oversized_initial_value_rejected():
    with pytest.raises(ConfigurationError):
        ArcRegister(b"\x00" * 65, 1, 64)


def test_construction_far_above_identified_reader_limits():
    reg = ArcRegister(b"\x01" * 8, 128, 8)
    assert len(reg._slots) == 130
    assert unpack(reg._current.load()) == (0, 128)


# -- read paths -------------------------------------------------------------


def test_repeat_reads_hit_cache_and_leave_counter_alone():
    reg = make()
    reader = reg.new_reader()
    before = reg._current.load()
    a = reader.read()
    b = reader.read()
    assert a == b
    assert reg._current.load() == before
    assert reg.rmw_counters() == (0, 0)


def test_transition_read_releases_old_slot_and_binds_new():
    reg = make(n_readers=2)
    reader = reg.new_reader()
    writer = reg.writer()
    writer.write(encode_versioned(1, 4096))
    published = unpack(reg._current.load())[0]
    buf, size = reader.read()
    assert decode_versioned(buf, size) == (1, True)
    assert reg._slots[0].r_end.load() == 1  # R3 released the init slot
    idx, counter = unpack(reg._current.load())
    assert (idx, counter) == (published, 1)  # R4 bound one unit
    assert reader.last_index == published  # R5
    assert reg.rmw_counters() == (2, 1)


def test_write_landing_between_r1_and_r4_is_adopted():
    # Interleaving where the publish lands after the reader's index load
    # but before its bind: the bind returns the newest index, so the read
    # returns the just-published value and leaves its unit there.
    reg = make(n_readers=2)
    reader = reg.new_reader()
    writer = reg.writer()
    writer.write(encode_versioned(1, 4096))  # reader still bound to slot 0

    class InterposingWord:
        def __init__(self, inner, hook):
            self.inner, self.hook, self.fired = inner, hook, False

        def load(self):
            return self.inner.load()

        def exchange(self, value):
            return self.inner.exchange(value)

        def add_and_fetch(self, delta):
            if not self.fired:
                self.fired = True
                self.hook()
            return self.inner.add_and_fetch(delta)

    word = reg._current
    reg._current = InterposingWord(word, lambda: writer.write(encode_versioned(2, 4096)))
    try:
        buf, size = reader.read()
    finally:
        reg._current = word

    assert decode_versioned(buf, size) == (2, True)
    assert reader.last_index == writer.last_slot
    idx, counter = unpack(reg._current.load())
    assert (idx, counter) == (writer.last_slot, 1)
    assert reg._slots[0].r_end.load() == 1


def test_reads_are_bounded_to_two_rmw():
    reg = make(n_readers=2)
    reader = reg.new_reader()
    writer = reg.writer()
    for seq in range(1, 20):
        writer.write(encode_versioned(seq, 4096))
        reader.read()
        reader.read()
    assert reader.max_read_rmw <= 2


def test_bound_view_stays_stable_while_writer_advances():
    reg = make(n_readers=1, max_size=64)
    reader = reg.new_reader()
    writer = reg.writer()
    writer.write(encode_versioned(1, 64))
    buf, size = reader.read()
    snapshot = bytes(buf[:size])
    for seq in range(2, 12):
        writer.write(encode_versioned(seq, 64))
    assert bytes(buf[:size]) == snapshot  # presence unit pins the slot
    buf2, size2 = reader.read()
    seq, intact = decode_versioned(buf2, size2)
    assert intact and seq == 11


# -- write paths ------------------------------------------------------------


def test_first_write_selects_fresh_slot_and_freezes_init_counter():
    reg = make(n_readers=2)
    writer = reg.writer()
    writer.write(encode_versioned(1, 4096))
    assert writer.last_slot in (1, 2, 3)
    assert writer.last_slot == 1  # lowest-index tie-break
    # The exchange returned pack(0, N): the init slot froze at N.
    assert reg._slots[0].r_start == 2
    idx, counter = unpack(reg._current.load())
    assert (idx, counter) == (1, 0)


def test_write_never_reuses_last_slot_even_if_free():
    reg = make(n_readers=2)
    writer = reg.writer()
    writer.last_slot = 1
    reg._slots[1].r_start = 5
    reg._slots[1].r_end.store(5)
    assert writer.find_free_slot() == 0


def test_oversized_write_rejected():
    reg = make(max_size=64)
    writer = reg.writer()
    with pytest.raises(ConfigurationError):
        writer.write(b"\x00" * 65)


def test_scan_length_never_exceeds_slot_count():
    reg = make(n_readers=2)
    reader = reg.new_reader()
    writer = reg.writer()
    for seq in range(1, 50):
        writer.write(encode_versioned(seq, 4096))
        reader.read()
    assert writer.max_scan_len <= 2 + 2


def test_sequential_seq_progression_visible_to_reader():
    reg = make(n_readers=1, max_size=256)
    reader = reg.new_reader()
    writer = reg.writer()
    for seq in range(1, 1001):
        writer.write(encode_versioned(seq, 256))
        got, intact = decode_versioned(*reader.read())
        assert intact
        assert got == seq


# -- free-slot proposal (hint word) ------------------------------------------


def test_scan_tie_break_lowest_index():
    reg = make(n_readers=2)
    writer = reg.writer()
    assert reg._proposal == NO_PROPOSAL
    assert writer.find_free_slot() == 1  # slot 0 is last_slot at init


def test_valid_proposal_is_used_without_scanning():
    reg = make(n_readers=2)
    writer = reg.writer()
    reg._proposal = 3
    assert writer.find_free_slot() == 3
    assert writer.last_scan_len == 0
    assert reg._proposal == NO_PROPOSAL  # consumed


def test_proposal_equal_to_last_slot_is_rejected():
    reg = make(n_readers=2)
    writer = reg.writer()
    reg._proposal = 0  # == last_slot right after init
    assert writer.find_free_slot() == 1  # scan fallback
    assert reg._proposal == NO_PROPOSAL  # cleared on rejection


def test_busy_proposal_is_rejected():
    reg = make(n_readers=2)
    writer = reg.writer()
    reg._slots[3].r_start = 2  # frozen with an outstanding unit
    reg._slots[3].r_end.store(1)
    reg._proposal = 3
    assert writer.find_free_slot() == 1


def test_reader_proposes_slot_when_release_empties_it():
    reg = make(n_readers=2)
    r1, r2 = reg.new_reader(), reg.new_reader()
    writer = reg.writer()
    writer.write(encode_versioned(1, 4096))  # freezes slot 0 at r_start=2
    r1.read()
    assert reg._proposal == NO_PROPOSAL  # r_end(0)=1 != 2
    r2.read()
    assert reg._proposal == 0  # r_end(0)=2 == frozen r_start


def test_two_proposals_last_overwrite_wins():
    reg = make(n_readers=2)
    r1, r2 = reg.new_reader(), reg.new_reader()
    writer = reg.writer()
    writer.write(encode_versioned(1, 4096))
    r1.read()
    r2.read()  # both on the new slot; slot 0 proposed
    prev = writer.last_slot
    writer.write(encode_versioned(2, 4096))  # consumes the hint
    r1.read()
    r2.read()
    assert reg._proposal == prev  # the slot both readers just released


# -- counters ---------------------------------------------------------------


def test_rmw_counter_examples():
    reg = make(n_readers=2)
    reader = reg.new_reader()
    writer = reg.writer()
    reader.read()
    assert reg.rmw_counters() == (0, 0)
    writer.write(encode_versioned(1, 4096))
    assert reg.rmw_counters() == (0, 1)  # exactly the publish exchange
    reader.read()
    assert reg.rmw_counters() == (2, 1)  # release + bind


def test_content_buffer_accounting_is_exactly_n_plus_2():
    for n in (1, 2, 31):
        reg = make(n_readers=n, max_size=64)
        assert reg.content_buffer_count == n + 2
