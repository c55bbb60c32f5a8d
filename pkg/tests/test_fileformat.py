import random

import pytest

from ucst.errors import InputError
from ucst.fileformat import (
    instance_equal,
    nfa_to_regex,
    parse_pep,
    parse_ucst,
    pep_equal,
    print_pep,
    print_ucst,
)
from ucst.randomgen import random_instance, random_ucst
from ucst.reductions import run_pipeline, ucst_to_pep
from ucst.regdata import Nfa, language_equal, parse_regex

FIG6_TEXT = """\
// the six-rule worked example
alphabet: a b c
sender: p_in p1 p2 p3 p_fi
receiver: q_in q1 q_fi
rule s: p_in -> p1 : l!a
rule s: p1 -> p2 : r!c
rule s: p2 -> p3 : l!b
rule s: p3 -> p_fi : l=EPS
rule r: q_in -> q1 : l?b
rule r: q1 -> q_fi : r?c
instance: p_in p_fi q_in q_fi
U: EPS
V: EPS
Up: EPS
Vp: EPS
"""


class TestNfaToRegex:
    def test_round_trips_language(self):
        corpus = ["EPS", "a", "a b | b a", "(ANY ANY)*", "a* b", "ANY+",
                  "(a | b b)* a"]
        for rex in corpus:
            lang = parse_regex(rex, ("a", "b"))
            back = parse_regex(nfa_to_regex(lang), ("a", "b"))
            assert language_equal(lang, back), rex

    def test_empty_language(self):
        assert nfa_to_regex(Nfa.nothing(("a",))) == "NONE"
        assert parse_regex("NONE", ("a",)).is_empty()

    def test_pad_closure_round_trips(self):
        lang = parse_regex("a | a b", ("a", "b")).pad_closure("n")
        back = parse_regex(nfa_to_regex(lang), ("a", "b", "n"))
        assert language_equal(lang, back)


class TestUcstFormat:
    def test_parse_fig6(self, fig6_instance):
        inst, stage = parse_ucst(FIG6_TEXT)
        assert stage is None
        assert instance_equal(inst, fig6_instance)

    def test_print_parse_round_trip(self, fig6_instance):
        text = print_ucst(fig6_instance)
        inst, _ = parse_ucst(text)
        assert instance_equal(inst, fig6_instance)

    def test_random_round_trips(self):
        rng = random.Random(31)
        for _ in range(15):
            s = random_ucst(rng, sender_tests=(("Z", "l"), ("N", "r")),
                            receiver_tests=(("Z", "r"),))
            inst = random_instance(rng, s)
            text = print_ucst(inst)
            back, _ = parse_ucst(text)
            assert instance_equal(back, inst)
            assert print_ucst(back) == text

    def test_reserved_symbols_rejected(self):
        bad = FIG6_TEXT.replace("alphabet: a b c", "alphabet: a z c")
        with pytest.raises(InputError):
            parse_ucst(bad)

    def test_stage_header_lifts_reservation(self):
        extended = FIG6_TEXT.replace("alphabet: a b c", "alphabet: a b c z")
        with pytest.raises(InputError):
            parse_ucst(extended)
        inst, stage = parse_ucst("stage: z1n1\n" + extended)
        assert stage == "z1n1" and "z" in inst.system.alphabet

    def test_emitted_stage_files_reparse(self, fig6_instance):
        inst, _ = parse_ucst(FIG6_TEXT)
        trace = run_pipeline(
            random_instance(random.Random(3),
                            random_ucst(random.Random(3),
                                        receiver_tests=(("Z", "l"), ("N", "l")))),
            to="eez1")
        emitted = print_ucst(trace.final_instance, stage="eez1")
        back, stage = parse_ucst(emitted)
        assert stage == "eez1"
        assert instance_equal(back, trace.final_instance)

    def test_parse_errors(self):
        with pytest.raises(InputError):
            parse_ucst("alphabet: a\nsender: p\nreceiver: q\n")
        with pytest.raises(InputError):
            parse_ucst(FIG6_TEXT + "\nbogus: x\n")


class TestPepFormat:
    def test_round_trip(self, fig6_instance):
        pep = ucst_to_pep(fig6_instance)
        text = print_pep(pep)
        back = parse_pep(text)
        assert pep_equal(back, pep)
        # emission works on the canonical minimal automaton, so it is stable
        assert print_pep(back) == text

    def test_empty_suffix_language(self):
        sigma = ("x",)
        from ucst.pep import PepInstance

        pep = PepInstance(sigma, ("g",), {"x": ("g",)}, {"x": ()},
                          parse_regex("x", sigma), Nfa.nothing(sigma))
        back = parse_pep(print_pep(pep))
        assert pep_equal(back, pep)

    def test_parse_errors(self):
        with pytest.raises(InputError):
            parse_pep("sigma: a\ngamma: g\nR: a\n")
