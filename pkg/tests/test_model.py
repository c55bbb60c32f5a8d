import random

import pytest

from ucst.errors import InputError
from ucst.model import (
    LOSS,
    LOSSY,
    RELIABLE,
    WRITE_LOSSY,
    Action,
    Configuration,
    Rule,
    Run,
    Ucst,
    classify_tests,
    commute,
    commute_case,
    emptiness_test,
    even_length_test,
    first_invalid_step,
    head_test,
    is_head_lossy,
    nonemptiness_test,
    successors,
    to_head_lossy,
    validate_run,
)
from ucst.randomgen import random_lossy_run, random_ucst
from ucst.regdata import Nfa, parse_regex


class TestSuccessors:
    def test_fig6_write_on_l(self, fig6):
        c = Configuration("p2", "q_in", ("c",), ("a",))
        succ = successors(fig6, c, LOSSY)
        assert (2, Configuration("p3", "q_in", ("c",), ("a", "b"))) in succ

    def test_loss_steps_by_position(self, fig6):
        c = Configuration("p_fi", "q_fi", (), ("a", "b"))
        losses = [pair for pair in successors(fig6, c, LOSSY) if pair[0] == LOSS]
        assert losses == [
            (LOSS, Configuration("p_fi", "q_fi", (), ("b",))),
            (LOSS, Configuration("p_fi", "q_fi", (), ("a",))),
        ]

    def test_emptiness_test_enabling(self, fig6):
        enabled = Configuration("p3", "q_in", ("c",), ())
        blocked = Configuration("p3", "q_in", ("c",), ("a",))
        assert any(lab == 3 for lab, _ in successors(fig6, enabled, RELIABLE))
        assert all(lab != 3 for lab, _ in successors(fig6, blocked, RELIABLE))

    def test_reliable_subset_of_lossy(self, fig6):
        rng = random.Random(7)
        c = Configuration("p2", "q_in", ("c",), ("a", "b"))
        rel = successors(fig6, c, RELIABLE)
        lossy = successors(fig6, c, LOSSY)
        wl = successors(fig6, c, WRITE_LOSSY)
        for pair in rel:
            assert pair in lossy and pair in wl

    def test_write_lossy_adds_dropped_write(self, fig6):
        c = Configuration("p2", "q_in", (), ())
        succ = successors(fig6, c, WRITE_LOSSY)
        assert (2, Configuration("p3", "q_in", (), ("b",))) in succ
        assert (("wrlo", 2), Configuration("p3", "q_in", (), ())) in succ
        assert all(lab != LOSS for lab, _ in succ)

    def test_bad_configuration(self, fig6):
        with pytest.raises(InputError):
            successors(fig6, Configuration("nope", "q_in", (), ()), LOSSY)


class TestClassify:
    def test_standard_labels(self):
        m = ("a", "b")
        srules = [
            Rule("p0", "l", Action.test(emptiness_test(m)), "p0"),
            Rule("p0", "r", Action.test(parse_regex("(ANY ANY)*", m)), "p0"),
            Rule("p0", "r", Action.test(parse_regex("a ANY*", m)), "p0"),
        ]
        rrules = [Rule("q0", "l", Action.test(parse_regex("ANY ANY*", m)), "q0")]
        s = Ucst(m, ("p0",), ("q0",), srules, rrules)
        report = classify_tests(s)
        labels = [(t.label, t.agent, t.channel) for t in report.tests]
        assert labels == [("Z", 1, "l"), ("Even", 1, "r"), ("H", 1, "r"),
                          ("N", 2, "l")]
        assert report.tests[2].head_sym == "a"
        assert report.fragment() == {"Z1l", "P1r", "H1r", "N2l"}

    def test_other_test(self):
        m = ("a", "b")
        s = Ucst(m, ("p0",), ("q0",),
                 [Rule("p0", "r", Action.test(parse_regex("a b", m)), "p0")], [])
        assert classify_tests(s).fragment() == {"other"}

    def test_fragment_helpers(self, fig6):
        report = classify_tests(fig6)
        assert report.only_z1l() and report.only_z1()
        assert not report.has_receiver_tests()
        assert report.within({"Z"})


class TestValidateRun:
    def test_fig6_run_validates(self, fig6, fig6_run):
        assert validate_run(fig6, fig6_run, LOSSY)

    def test_loss_removal_breaks_it(self, fig6, fig6_run):
        steps = [(lab, cfg) for lab, cfg in fig6_run.steps if lab != LOSS]
        # recompute configurations: without the loss the read of b fails at
        # head a, so validation must point at that read (index 3)
        broken = Run(fig6_run.start, tuple(steps))
        assert not validate_run(fig6, broken, LOSSY)
        assert first_invalid_step(fig6, broken, LOSSY) == 3

    def test_empty_run(self, fig6):
        assert validate_run(fig6, Run(Configuration("p2", "q1", ("x",), ())
                                      if False else Configuration("p2", "q1", (), ())),
                            LOSSY)

    def test_run_not_under_reliable(self, fig6, fig6_run):
        assert not validate_run(fig6, fig6_run, RELIABLE)


class TestHeadLossy:
    def test_fig6_run_is_head_lossy(self, fig6_run):
        assert is_head_lossy(fig6_run)

    def test_mid_word_loss_is_not(self):
        c0 = Configuration("p", "q", (), ("a", "b"))
        c1 = Configuration("p", "q", (), ("a",))
        c2 = Configuration("p", "q", (), ())
        run = Run(c0, (((LOSS), c1), (LOSS, c2)))
        assert is_head_lossy(run)  # only losses, all trailing
        s_dummy = None
        run2 = Run(c0, ((LOSS, c1), (0, c2)))
        assert not is_head_lossy(run2)  # loses "b" behind head before a rule

    def test_trailing_losses_ok(self, fig6):
        c0 = Configuration("p_in", "q_in", (), ())
        c1 = Configuration("p1", "q_in", (), ("a",))
        c2 = Configuration("p1", "q_in", (), ())
        run = Run(c0, ((0, c1), (LOSS, c2)))
        assert validate_run(fig6, run) and is_head_lossy(run)


def find_pair(s, run, wanted_case):
    for i in range(len(run.steps) - 1):
        if commute_case(s, run, i) == wanted_case:
            return i
    return None


class TestCommute:
    def test_no_contact(self, fig6):
        # Sender writes on r, then Receiver reads on l
        c0 = Configuration("p1", "q_in", (), ("b",))
        c1 = Configuration("p2", "q_in", ("c",), ("b",))
        c2 = Configuration("p2", "q1", ("c",), ())
        run = Run(c0, ((1, c1), (4, c2)))
        assert commute_case(fig6, run, 0) == "no-contact"
        swapped = commute(fig6, run, 0)
        assert validate_run(fig6, swapped)
        assert swapped.start == run.start and swapped.end == run.end
        assert swapped.labels() == [4, 1]

    def test_postponable_loss(self, fig6):
        # lose a b behind the head, then read the head b from l: only the
        # postponable-loss case covers a loss followed by a same-channel read
        c0 = Configuration("p_fi", "q_in", (), ("b", "b"))
        c1 = Configuration("p_fi", "q_in", (), ("b",))
        c2 = Configuration("p_fi", "q1", (), ())
        run = Run(c0, ((LOSS, c1), (4, c2)))
        assert validate_run(fig6, run)
        assert commute_case(fig6, run, 0) == "postponable-loss"
        swapped = commute(fig6, run, 0)
        assert validate_run(fig6, swapped)
        assert swapped.end == run.end

    def test_receiver_then_sender_z_test_excluded(self, fig6):
        c0 = Configuration("p3", "q_in", ("c",), ("b",))
        c1 = Configuration("p3", "q1", ("c",), ())
        c2 = Configuration("p_fi", "q1", ("c",), ())
        run = Run(c0, ((4, c1), (3, c2)))
        assert validate_run(fig6, run)
        assert commute(fig6, run, 0) is None

    def test_advanceable_sender_with_nonempty_test(self):
        m = ("a",)
        s = Ucst(m, ("p0", "p1"), ("q0", "q1"),
                 [Rule("p0", "l", Action.test(nonemptiness_test(m)), "p1")],
                 [Rule("q0", "l", Action.read("a"), "q1")])
        c0 = Configuration("p0", "q0", (), ("a", "a"))
        c1 = Configuration("p0", "q1", (), ("a",))
        c2 = Configuration("p1", "q1", (), ("a",))
        run = Run(c0, ((1, c1), (0, c2)))
        assert validate_run(s, run)
        assert commute_case(s, run, 0) == "advanceable-sender"
        swapped = commute(s, run, 0)
        assert validate_run(s, swapped) and swapped.end == run.end

    def test_advanceable_loss_excludes_l_write(self, fig6):
        # write b on l then lose that very b: not advanceable
        c0 = Configuration("p2", "q_fi", (), ())
        c1 = Configuration("p3", "q_fi", (), ("b",))
        c2 = Configuration("p3", "q_fi", (), ())
        run = Run(c0, ((2, c1), (LOSS, c2)))
        assert validate_run(fig6, run)
        assert commute(fig6, run, 0) is None


class TestToHeadLossy:
    def test_fixpoint(self, fig6, fig6_run):
        assert to_head_lossy(fig6, fig6_run) == fig6_run

    def test_repairs_mid_word_loss(self, fig6):
        # write a, write c on r, write b, lose the *a* ... build a run where a
        # non-head loss happens while more rules follow
        c0 = Configuration("p_in", "q_in", (), ())
        c1 = Configuration("p1", "q_in", (), ("a",))
        c2 = Configuration("p2", "q_in", ("c",), ("a",))
        c3 = Configuration("p3", "q_in", ("c",), ("a", "b"))
        c4 = Configuration("p3", "q_in", ("c",), ("a",))  # lost b (non-head)
        c5 = Configuration("p3", "q_in", ("c",), ())      # lost a
        c6 = Configuration("p_fi", "q_in", ("c",), ())
        run = Run(c0, ((0, c1), (1, c2), (2, c3), (LOSS, c4), (LOSS, c5), (3, c6)))
        assert validate_run(fig6, run)
        assert not is_head_lossy(run)
        fixed = to_head_lossy(fig6, run)
        assert validate_run(fig6, fixed)
        assert is_head_lossy(fixed)
        assert fixed.start == run.start and fixed.end == run.end

    def test_random_runs(self):
        rng = random.Random(20240811)
        for trial in range(100):
            s = random_ucst(rng, sender_tests=(("Z", "l"), ("N", "r")),
                            receiver_tests=(("Z", "r"), ("N", "l")))
            start = Configuration(s.sender_states[0], s.receiver_states[0], (), ())
            run = random_lossy_run(rng, s, start, rng.randrange(1, 12))
            assert validate_run(s, run)
            fixed = to_head_lossy(s, run)
            assert validate_run(s, fixed)
            assert is_head_lossy(fixed)
            assert fixed.start == run.start and fixed.end == run.end


class TestModelValidation:
    def test_state_sets_must_be_disjoint(self):
        with pytest.raises(InputError):
            Ucst(("a",), ("x",), ("x",), [], [])

    def test_rule_message_in_alphabet(self):
        with pytest.raises(InputError):
            Ucst(("a",), ("p",), ("q",),
                 [Rule("p", "r", Action.write("z"), "p")], [])

    def test_test_alphabet_must_match(self):
        with pytest.raises(InputError):
            Ucst(("a", "b"), ("p",), ("q",),
                 [Rule("p", "r", Action.test(Nfa.literal((), ("a",))), "p")], [])
