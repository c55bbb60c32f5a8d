"""Channel system model: rules, configurations, and the three step semantics.

A system has a Sender writing to two channels and a Receiver reading from
them; channel ``r`` is reliable, channel ``l`` loses messages.  Rules are
referenced everywhere by their stable integer id (position in the combined
Sender-then-Receiver rule list), and run labels store those ids.  The extra
labels are `LOSS` for a message-loss step on ``l`` and ``("wrlo", rule_id)``
for a write that loses its message at the moment of writing.
"""

from dataclasses import dataclass

from .errors import InputError
from .regdata import Nfa, is_downward_closed, is_upward_closed, language_equal, subword_one, word_str

R = "r"
L = "l"
CHANNELS = (R, L)

RELIABLE = "reliable"
LOSSY = "lossy"
WRITE_LOSSY = "write-lossy"
MODES = (RELIABLE, LOSSY, WRITE_LOSSY)

LOSS = "los"

SENDER = 1
RECEIVER = 2


@dataclass(frozen=True)
class Action:
    kind: str  # "write" | "read" | "test" | "nop"
    msg: object = None
    lang: Nfa = None

    @staticmethod
    def write(msg):
        return Action("write", msg=msg)

    @staticmethod
    def read(msg):
        return Action("read", msg=msg)

    @staticmethod
    def test(lang):
        return Action("test", lang=lang)

    @staticmethod
    def nop():
        return Action("nop")

    def __str__(self):
        if self.kind == "write":
            return f"!{self.msg}"
        if self.kind == "read":
            return f"?{self.msg}"
        if self.kind == "test":
            return "=<test>"
        return "nop"


@dataclass(frozen=True)
class Rule:
    source: str
    channel: str  # ignored for nop actions, stored as "r" by convention
    action: Action
    target: str

    def __str__(self):
        if self.action.kind == "nop":
            return f"{self.source} -> {self.target} : nop"
        return f"{self.source} -> {self.target} : {self.channel}{self.action}"


@dataclass(frozen=True)
class Configuration:
    p: str
    q: str
    u: tuple  # contents of r
    v: tuple  # contents of l

    def __str__(self):
        return f"({self.p}, {self.q}, r={word_str(self.u)}, l={word_str(self.v)})"


@dataclass(frozen=True)
class Run:
    start: Configuration
    steps: tuple = ()  # of (label, Configuration)

    @property
    def end(self):
        return self.steps[-1][1] if self.steps else self.start

    def configs(self):
        out = [self.start]
        out.extend(c for _, c in self.steps)
        return out

    def labels(self):
        return [lab for lab, _ in self.steps]

    def __len__(self):
        return len(self.steps)


class Ucst:
    """A system: alphabet, disjoint Sender/Receiver state sets, and rules.

    Immutable by convention; successor indexes are precomputed.
    """

    def __init__(self, alphabet, sender_states, receiver_states,
                 sender_rules, receiver_rules):
        self.alphabet = tuple(dict.fromkeys(alphabet))
        self.sender_states = tuple(dict.fromkeys(sender_states))
        self.receiver_states = tuple(dict.fromkeys(receiver_states))
        self.sender_rules = tuple(sender_rules)
        self.receiver_rules = tuple(receiver_rules)
        self.rules = self.sender_rules + self.receiver_rules
        self.n_sender_rules = len(self.sender_rules)
        self._check()
        self._sender_by_source = {}
        self._receiver_by_source = {}
        for i, rule in enumerate(self.sender_rules):
            self._sender_by_source.setdefault(rule.source, []).append((i, rule))
        for j, rule in enumerate(self.receiver_rules):
            rid = self.n_sender_rules + j
            self._receiver_by_source.setdefault(rule.source, []).append((rid, rule))

    def _check(self):
        senders, receivers = set(self.sender_states), set(self.receiver_states)
        if senders & receivers:
            raise InputError("sender and receiver state sets must be disjoint")
        sigma = set(self.alphabet)
        for rule, states in [(r, senders) for r in self.sender_rules] + \
                            [(r, receivers) for r in self.receiver_rules]:
            if rule.source not in states or rule.target not in states:
                raise InputError(f"rule endpoints outside owner's states: {rule}")
            if rule.channel not in CHANNELS:
                raise InputError(f"unknown channel in rule: {rule}")
            act = rule.action
            if act.kind in ("write", "read") and act.msg not in sigma:
                raise InputError(f"rule message not in alphabet: {rule}")
            if act.kind == "test" and set(act.lang.alphabet) != sigma:
                raise InputError(f"test alphabet differs from system alphabet: {rule}")

    def agent_of(self, rule_id):
        return SENDER if rule_id < self.n_sender_rules else RECEIVER

    def rule(self, rule_id):
        return self.rules[rule_id]

    def __repr__(self):
        return (f"Ucst(|M|={len(self.alphabet)}, |Q1|={len(self.sender_states)}, "
                f"|Q2|={len(self.receiver_states)}, |D1|={self.n_sender_rules}, "
                f"|D2|={len(self.receiver_rules)})")


@dataclass(frozen=True)
class ReachInstance:
    """A generalized reachability question with four regular constraints."""

    system: Ucst
    p_in: str
    p_fi: str
    q_in: str
    q_fi: str
    U: Nfa   # initial r
    V: Nfa   # initial l
    Up: Nfa  # final r
    Vp: Nfa  # final l

    def __post_init__(self):
        s = self.system
        if self.p_in not in s.sender_states or self.p_fi not in s.sender_states:
            raise InputError("distinguished sender states missing from system")
        if self.q_in not in s.receiver_states or self.q_fi not in s.receiver_states:
            raise InputError("distinguished receiver states missing from system")
        for nfa in (self.U, self.V, self.Up, self.Vp):
            if set(nfa.alphabet) != set(s.alphabet):
                raise InputError("constraint alphabet differs from system alphabet")

    def constraints(self):
        return (self.U, self.V, self.Up, self.Vp)


# -- test languages ------------------------------------------------------------

def emptiness_test(alphabet):
    return Nfa.literal((), alphabet)


def nonemptiness_test(alphabet):
    return Nfa.one_of(alphabet, alphabet).concat(Nfa.all_words(alphabet))


def even_length_test(alphabet):
    double = Nfa(alphabet, 3, {0}, {2},
                 [(0, s, 1) for s in alphabet] + [(1, s, 2) for s in alphabet])
    return double.star()


def odd_length_test(alphabet):
    return Nfa.one_of(alphabet, alphabet).concat(even_length_test(alphabet))


def head_test(sym, alphabet):
    return Nfa.literal((sym,), alphabet).concat(Nfa.all_words(alphabet))


@dataclass(frozen=True)
class TestClass:
    rule_id: int
    agent: int
    channel: str
    label: str        # "Z" | "N" | "Even" | "Odd" | "H" | "other"
    head_sym: object = None

    def atom(self):
        """Fragment atom like Z1l, N1r, P2r, H1r; parity collapses to P."""
        if self.label == "other":
            return "other"
        sym = "P" if self.label in ("Even", "Odd") else self.label
        return f"{sym}{self.agent}{self.channel}"


@dataclass(frozen=True)
class FragmentReport:
    tests: tuple

    def fragment(self):
        return frozenset(t.atom() for t in self.tests)

    def has_receiver_tests(self):
        return any(t.agent == RECEIVER for t in self.tests)

    def within(self, labels):
        return all(t.label in labels for t in self.tests)

    def only_z1(self):
        return all(t.label == "Z" and t.agent == SENDER for t in self.tests)

    def only_z1l(self):
        return all(t.label == "Z" and t.agent == SENDER and t.channel == L
                   for t in self.tests)


def classify_tests(s):
    """Decide, per test rule, which standard test language it carries."""
    alphabet = s.alphabet
    references = [("Z", emptiness_test(alphabet)),
                  ("N", nonemptiness_test(alphabet)),
                  ("Even", even_length_test(alphabet)),
                  ("Odd", odd_length_test(alphabet))]
    found = []
    for rid, rule in enumerate(s.rules):
        if rule.action.kind != "test":
            continue
        agent = s.agent_of(rid)
        label, head_sym = "other", None
        for name, ref in references:
            if language_equal(rule.action.lang, ref):
                label = name
                break
        if label == "other":
            for a in alphabet:
                if language_equal(rule.action.lang, head_test(a, alphabet)):
                    label, head_sym = "H", a
                    break
        found.append(TestClass(rid, agent, rule.channel, label, head_sym))
    return FragmentReport(tuple(found))


# -- step semantics ------------------------------------------------------------

def _fire(rule, agent, c):
    """Resulting configuration if `rule` is enabled at `c`, else None."""
    if agent == SENDER:
        if rule.source != c.p:
            return None
        p2, q2 = rule.target, c.q
    else:
        if rule.source != c.q:
            return None
        p2, q2 = c.p, rule.target
    act = rule.action
    u, v = c.u, c.v
    if act.kind == "nop":
        return Configuration(p2, q2, u, v)
    content = u if rule.channel == R else v
    if act.kind == "test":
        if not act.lang.accepts(content):
            return None
        return Configuration(p2, q2, u, v)
    if act.kind == "write":
        if agent != SENDER:
            return None
        new = content + (act.msg,)
    else:  # read
        if agent != RECEIVER:
            return None
        if not content or content[0] != act.msg:
            return None
        new = content[1:]
    if rule.channel == R:
        return Configuration(p2, q2, new, v)
    return Configuration(p2, q2, u, new)


def loss_results(v):
    """Distinct single-symbol losses of v, ordered by deleted position."""
    seen = []
    out = []
    for i in range(len(v)):
        smaller = v[:i] + v[i + 1:]
        if smaller not in seen:
            seen.append(smaller)
            out.append(smaller)
    return out


def successors(s, c, mode=LOSSY):
    """Labelled successor list of configuration `c`, deterministically ordered.

    Order: Sender rules by id (in write-lossy mode each enabled l-write is
    immediately followed by its dropped-write variant), then Receiver rules
    by id, then losses by deleted position.
    """
    if mode not in MODES:
        raise InputError(f"unknown mode {mode!r}")
    if c.p not in s.sender_states or c.q not in s.receiver_states:
        raise InputError("configuration states not in system")
    out = []
    for rid, rule in s._sender_by_source.get(c.p, ()):
        nxt = _fire(rule, SENDER, c)
        if nxt is not None:
            out.append((rid, nxt))
            if (mode == WRITE_LOSSY and rule.action.kind == "write"
                    and rule.channel == L):
                out.append((("wrlo", rid), Configuration(rule.target, c.q, c.u, c.v)))
    for rid, rule in s._receiver_by_source.get(c.q, ()):
        nxt = _fire(rule, RECEIVER, c)
        if nxt is not None:
            out.append((rid, nxt))
    if mode == LOSSY:
        for smaller in loss_results(c.v):
            out.append((LOSS, Configuration(c.p, c.q, c.u, smaller)))
    return out


def first_invalid_step(s, run, mode=LOSSY):
    """Index of the first step not generated by `successors`, or None."""
    cur = run.start
    if cur.p not in s.sender_states or cur.q not in s.receiver_states:
        return 0
    for i, (label, nxt) in enumerate(run.steps):
        if (label, nxt) not in successors(s, cur, mode):
            return i
        cur = nxt
    return None


def validate_run(s, run, mode=LOSSY):
    return first_invalid_step(s, run, mode) is None


def is_head_lossy(run):
    """Every loss removes the head of l, or happens after the last rule step."""
    last_rule = -1
    for i, (label, _) in enumerate(run.steps):
        if label != LOSS:
            last_rule = i
    configs = run.configs()
    for i, (label, nxt) in enumerate(run.steps):
        if label == LOSS and i < last_rule:
            if nxt.v != configs[i].v[1:]:
                return False
    return True


# -- commuting adjacent steps ---------------------------------------------------

def _step_info(s, label):
    """(agent, action_kind, channel, rule) with loss encoded as (None, 'loss', L)."""
    if label == LOSS:
        return None, "loss", L, None
    rule = s.rule(label)
    agent = s.agent_of(label)
    channel = None if rule.action.kind == "nop" else rule.channel
    return agent, rule.action.kind, channel, rule


def _case_no_contact(i1, i2):
    agent1, kind1, ch1, _ = i1
    agent2, kind2, ch2, _ = i2
    if kind1 == "loss":
        return kind2 == "loss" or (ch2 is not None and ch2 != L)
    if ch1 is None:
        return False
    if kind2 == "loss":
        return ch1 != L
    return ch2 is not None and agent1 != agent2 and ch1 != ch2


def _case_postponable_loss(i1, src, mid):
    # the loss admits an interpretation behind the head of l
    if i1[1] != "loss":
        return False
    v, v2 = src.v, mid.v
    return len(v) >= 2 and v2[:1] == v[:1] and subword_one(v2[1:], v[1:])


def _case_advanceable_sender(i1, i2):
    agent1, kind1, ch1, rule1 = i1
    agent2, kind2, ch2, rule2 = i2
    if not (kind1 == "loss" or agent1 == RECEIVER):
        return False
    if agent2 != SENDER:
        return False
    if kind2 == "test":
        # sound only for tests stable under channel growth (e.g. nonemptiness)
        return is_upward_closed(rule2.action.lang)
    if kind1 == "test" and kind2 == "write" and ch1 == ch2:
        # a Receiver test overtaken by a write to the tested channel must
        # also be growth-stable: an emptiness test would fail afterwards
        return is_upward_closed(rule1.action.lang)
    return True


def _case_advanceable_loss(i1, i2):
    agent1, kind1, ch1, rule1 = i1
    if i2[1] != "loss":
        return False
    if agent1 == SENDER and kind1 == "write" and ch1 == L:
        return False
    if kind1 == "test" and ch1 == L:
        # sound only for tests stable under losses (e.g. emptiness)
        return is_downward_closed(rule1.action.lang)
    return True


def commute_case(s, run, i):
    """Name of the first commuting case that covers steps i, i+1, or None."""
    if not (0 <= i and i + 1 < len(run.steps)):
        raise InputError("index must address two consecutive steps")
    configs = run.configs()
    lab1, lab2 = run.steps[i][0], run.steps[i + 1][0]
    info1, info2 = _step_info(s, lab1), _step_info(s, lab2)
    if _case_no_contact(info1, info2):
        return "no-contact"
    if _case_postponable_loss(info1, configs[i], configs[i + 1]):
        return "postponable-loss"
    if _case_advanceable_sender(info1, info2):
        return "advanceable-sender"
    if _case_advanceable_loss(info1, info2):
        return "advanceable-loss"
    return None


def commute(s, run, i, mode=LOSSY):
    """Swap steps i and i+1 if a commuting case applies; else None.

    The middle configuration is recomputed; when a case condition holds the
    swapped order must validate, so failure to find it is an internal error.
    """
    case = commute_case(s, run, i)
    if case is None:
        return None
    configs = run.configs()
    lab1, lab2 = run.steps[i][0], run.steps[i + 1][0]
    target = configs[i + 2]
    for labm, mid in successors(s, configs[i], mode):
        if labm != lab2:
            continue
        for labe, end in successors(s, mid, mode):
            if labe == lab1 and end == target:
                steps = list(run.steps)
                steps[i] = (lab2, mid)
                steps[i + 1] = (lab1, target)
                return Run(run.start, tuple(steps))
    raise RuntimeError(f"commuting case {case} held but no swapped order validates")


def to_head_lossy(s, run, mode=LOSSY):
    """Equivalent head-lossy run with the same endpoints.

    Repeatedly pushes a non-head loss one step to the right (the postponable
    loss case always applies to it); terminates because each move strictly
    shifts that loss toward the trailing-loss zone.
    """
    cur = run
    budget = (len(run.steps) + 1) ** 2 + 1
    while budget:
        budget -= 1
        configs = cur.configs()
        last_rule = -1
        for i, (label, _) in enumerate(cur.steps):
            if label != LOSS:
                last_rule = i
        moved = False
        for i, (label, nxt) in enumerate(cur.steps):
            if label == LOSS and i < last_rule and nxt.v != configs[i].v[1:]:
                swapped = commute(s, cur, i, mode)
                if swapped is None:
                    raise RuntimeError("non-head loss was not postponable")
                cur = swapped
                moved = True
                break
        if not moved:
            return cur
    raise RuntimeError("head-lossy normalization did not terminate")


def format_run(s, run):
    lines = [f"start {run.start}"]
    for i, (label, cfg) in enumerate(run.steps):
        if label == LOSS:
            what = "los"
        elif isinstance(label, tuple):
            what = f"wrlo #{label[1]} {s.rule(label[1])}"
        else:
            agent = "s" if s.agent_of(label) == SENDER else "r"
            what = f"rule {agent}#{label} {s.rule(label)}"
        lines.append(f"  {i + 1}. {what}  => {cfg}")
    return "\n".join(lines)
