"""The reduction pipeline, the backward-saturation procedure, and PEP bridges.

Stage by stage: Receiver tests are traded for two signal messages written by
Sender; regular initial constraints are materialized by a generating prefix;
Sender's nonemptiness tests are absorbed into one-letter write buffers; and
regular final constraints are consumed by Receiver after a marker.  A system
whose only remaining tests are Sender emptiness tests on the lossy channel
maps to a Post embedding instance and back.
"""

from dataclasses import dataclass

from .errors import FragmentError, InputError, OracleInconclusive
from .explore import bounded_reach
from .model import (
    L,
    LOSSY,
    R,
    Action,
    Configuration,
    ReachInstance,
    Rule,
    Ucst,
    classify_tests,
    emptiness_test,
    nonemptiness_test,
)
from .pep import PepInstance, PreSolutionContext
from .regdata import Dfa, Nfa, language_equal, subword, symkey

RESERVED_SYMBOLS = ("z", "n", "#")


class _Names:
    def __init__(self, taken):
        self.taken = set(taken)

    def fresh(self, base):
        name = base
        k = 1
        while name in self.taken:
            name = f"{base}~{k}"
            k += 1
        self.taken.add(name)
        return name


def _is_eps_language(nfa):
    return language_equal(nfa, Nfa.literal((), nfa.alphabet))


def _require_reserved_free(alphabet, symbols):
    clash = [s for s in symbols if s in alphabet]
    if clash:
        raise InputError(
            f"alphabet uses reserved symbol(s) {clash}; rename them first")


# -- upward-closed sets of configurations with empty r --------------------------

def _config_key(c):
    return (c.p, c.q, len(c.v), tuple(symkey(x) for x in c.v))


def config_below(c, d):
    """Ordering on configurations with empty r: equal states, v a subword."""
    return c.p == d.p and c.q == d.q and subword(c.v, d.v)


@dataclass(frozen=True)
class UpwardClosedSet:
    """Finite antichain of minimal configurations, all with empty r."""

    minimal: tuple = ()

    def __post_init__(self):
        for c in self.minimal:
            if c.u != ():
                raise InputError("upward-closed sets live in the r-empty slice")
        for c in self.minimal:
            for d in self.minimal:
                if c is not d and config_below(c, d):
                    raise InputError("minimal elements must form an antichain")

    @staticmethod
    def empty():
        return UpwardClosedSet(())

    @staticmethod
    def of(configs):
        mins = []
        for c in sorted(configs, key=_config_key):
            if not any(config_below(m, c) for m in mins):
                mins = [m for m in mins if not config_below(c, m)] + [c]
        return UpwardClosedSet(tuple(sorted(mins, key=_config_key)))

    def contains(self, c):
        return any(config_below(m, c) for m in self.minimal)

    def insert(self, c):
        if self.contains(c):
            return self
        return UpwardClosedSet.of(self.minimal + (c,))

    def union(self, other):
        return UpwardClosedSet.of(self.minimal + other.minimal)

    def __len__(self):
        return len(self.minimal)


# -- stage 1: eliminate Receiver tests ------------------------------------------

def elim_receiver_tests(inst):
    """Trade Receiver's emptiness/nonemptiness tests for reads of two fresh
    signal messages; initial constraints become their padded closures."""
    s = inst.system
    report = classify_tests(s)
    if not report.within({"Z", "N"}):
        raise FragmentError("stage expects emptiness/nonemptiness tests only")
    _require_reserved_free(s.alphabet, ("z", "n"))
    m2 = s.alphabet + ("z", "n")
    z2 = emptiness_test(m2)
    n2 = nonemptiness_test(m2)
    label_of = {t.rule_id: t.label for t in report.tests}
    names = _Names(set(s.sender_states) | set(s.receiver_states))

    sender_states = list(s.sender_states)
    sender_rules = []
    for rid, rule in enumerate(s.sender_rules):
        if rule.action.kind == "test":
            lang = z2 if label_of[rid] == "Z" else n2
            sender_rules.append(Rule(rule.source, rule.channel,
                                     Action.test(lang), rule.target))
        else:
            sender_rules.append(rule)
    # emptiness testing loop per sender state and channel
    for p in s.sender_states:
        for c in (R, L):
            p1 = names.fresh(f"{p}.z1{c}")
            p2 = names.fresh(f"{p}.z2{c}")
            sender_states += [p1, p2]
            sender_rules += [
                Rule(p, c, Action.test(z2), p1),
                Rule(p1, c, Action.write("z"), p2),
                Rule(p2, c, Action.test(z2), p),
            ]
    # padding detour per original write rule
    for rid, rule in enumerate(s.sender_rules):
        if rule.action.kind == "write":
            pt = names.fresh(f"{rule.source}.pad{rid}")
            sender_states.append(pt)
            sender_rules += [
                Rule(rule.source, R, Action.nop(), pt),
                Rule(pt, rule.channel, Action.write("n"), pt),
                Rule(pt, rule.channel, Action.write(rule.action.msg), rule.target),
            ]

    receiver_rules = []
    for j, rule in enumerate(s.receiver_rules):
        rid = s.n_sender_rules + j
        if rule.action.kind == "test":
            msg = "z" if label_of[rid] == "Z" else "n"
            receiver_rules.append(Rule(rule.source, rule.channel,
                                       Action.read(msg), rule.target))
        else:
            receiver_rules.append(rule)

    system = Ucst(m2, sender_states, s.receiver_states, sender_rules,
                  receiver_rules)
    return ReachInstance(
        system, inst.p_in, inst.p_fi, inst.q_in, inst.q_fi,
        inst.U.pad_closure("n").with_alphabet(m2),
        inst.V.pad_closure("n").with_alphabet(m2),
        inst.Up.with_alphabet(m2), inst.Vp.with_alphabet(m2))


# -- stage 2: eliminate regular initial constraints ------------------------------

def _emit_writer(nfa, channel, entry, exit_, make_action, names, states, rules):
    """Spell one word of L(nfa) between `entry` and `exit_` using write or
    read rules on `channel`.  Accepting sink states merge into `exit_`."""
    a = nfa.normalize()
    outgoing = {src for src, _, _ in a.transitions}
    mapping = {}
    inits = sorted(a.initial)
    if len(inits) == 1:
        mapping[inits[0]] = entry
    for st in sorted(a.accepting):
        if st not in outgoing and st not in mapping:
            mapping[st] = exit_
    for st in range(a.n_states):
        if st not in mapping:
            name = names.fresh(f"{entry}.g{st}")
            states.append(name)
            mapping[st] = name
    if len(inits) != 1:
        for st in inits:
            rules.append(Rule(entry, R, Action.nop(), mapping[st]))
    for src, sym, dst in a.transitions:
        rules.append(Rule(mapping[src], channel, make_action(sym), mapping[dst]))
    for st in sorted(a.accepting):
        if mapping[st] != exit_:
            rules.append(Rule(mapping[st], R, Action.nop(), exit_))


def elim_initial(inst):
    """Fresh Sender start that writes some admissible initial contents on r,
    then on l, then behaves as before; sound only without Receiver tests."""
    s = inst.system
    if classify_tests(s).has_receiver_tests():
        raise FragmentError("initial-constraint elimination needs a test-free Receiver")
    names = _Names(set(s.sender_states) | set(s.receiver_states))
    states = list(s.sender_states)
    rules = []
    p_new = names.fresh("p_new")
    states.append(p_new)
    u_trivial = _is_eps_language(inst.U)
    v_trivial = _is_eps_language(inst.V)
    if v_trivial:
        v_entry = inst.p_in
    else:
        v_entry = names.fresh("p_new.l")
        states.append(v_entry)
    if u_trivial:
        rules.append(Rule(p_new, R, Action.nop(), v_entry))
    else:
        _emit_writer(inst.U, R, p_new, v_entry, Action.write, names, states, rules)
    if not v_trivial:
        _emit_writer(inst.V, L, v_entry, inst.p_in, Action.write, names, states, rules)
    system = Ucst(s.alphabet, states, s.receiver_states,
                  rules + list(s.sender_rules), s.receiver_rules)
    eps = Nfa.literal((), s.alphabet)
    return ReachInstance(system, p_new, inst.p_fi, inst.q_in, inst.q_fi,
                         eps, eps, inst.Up, inst.Vp)


# -- stage 3: eliminate Sender nonemptiness tests ---------------------------------

def _buffer_name(q, x, y):
    return f"{q}[{x or '-'},{y or '-'}]"


def elim_n1(inst):
    """Give Sender a one-letter buffer per channel: writes fill an empty
    buffer, nonemptiness tests read off buffer occupancy, emptiness tests
    additionally require the buffer empty, and buffers flush at any time."""
    s = inst.system
    report = classify_tests(s)
    if report.has_receiver_tests() or not report.within({"Z", "N"}):
        raise FragmentError("buffering stage expects Sender-only Z/N tests")
    if not (_is_eps_language(inst.U) and _is_eps_language(inst.V)):
        raise FragmentError("buffering stage expects empty initial constraints")
    label_of = {t.rule_id: t.label for t in report.tests}
    bufs = (None,) + s.alphabet
    states = [_buffer_name(q, x, y) for q in s.sender_states
              for x in bufs for y in bufs]
    rules = []
    for rid, rule in enumerate(s.sender_rules):
        kind = rule.action.kind
        src, dst = rule.source, rule.target
        if kind == "write" and rule.channel == R:
            for y in bufs:
                rules.append(Rule(_buffer_name(src, None, y), R, Action.nop(),
                                  _buffer_name(dst, rule.action.msg, y)))
        elif kind == "write" and rule.channel == L:
            for x in bufs:
                rules.append(Rule(_buffer_name(src, x, None), R, Action.nop(),
                                  _buffer_name(dst, x, rule.action.msg)))
        elif kind == "test" and label_of[rid] == "N":
            for x in bufs:
                for y in bufs:
                    occupied = x if rule.channel == R else y
                    if occupied is not None:
                        rules.append(Rule(_buffer_name(src, x, y), R,
                                          Action.nop(), _buffer_name(dst, x, y)))
        elif kind == "test":  # emptiness: channel and buffer both empty
            if rule.channel == R:
                for y in bufs:
                    rules.append(Rule(_buffer_name(src, None, y), R,
                                      rule.action, _buffer_name(dst, None, y)))
            else:
                for x in bufs:
                    rules.append(Rule(_buffer_name(src, x, None), L,
                                      rule.action, _buffer_name(dst, x, None)))
        else:  # nop
            for x in bufs:
                for y in bufs:
                    rules.append(Rule(_buffer_name(src, x, y), R, Action.nop(),
                                      _buffer_name(dst, x, y)))
    for q in s.sender_states:
        for x in bufs:
            for y in bufs:
                if x is not None:
                    rules.append(Rule(_buffer_name(q, x, y), R, Action.write(x),
                                      _buffer_name(q, None, y)))
                if y is not None:
                    rules.append(Rule(_buffer_name(q, x, y), L, Action.write(y),
                                      _buffer_name(q, x, None)))
    system = Ucst(s.alphabet, states, s.receiver_states, rules, s.receiver_rules)
    return ReachInstance(system,
                         _buffer_name(inst.p_in, None, None),
                         _buffer_name(inst.p_fi, None, None),
                         inst.q_in, inst.q_fi,
                         inst.U, inst.V, inst.Up, inst.Vp)


# -- stage 4: eliminate regular final constraints ---------------------------------

def _mode_name(p, x, y):
    return f"{p}<{x}{y}>"


def elim_final(inst):
    """Sender marks, once per channel, the point where the final contents
    start; Receiver then cleans the markers and consumes words of the final
    constraints.  Emptiness tests are forbidden after the channel's marker."""
    s = inst.system
    report = classify_tests(s)
    if not report.only_z1():
        raise FragmentError("final-constraint elimination expects Sender-only emptiness tests")
    if not (_is_eps_language(inst.U) and _is_eps_language(inst.V)):
        raise FragmentError("final-constraint elimination expects empty initial constraints")
    _require_reserved_free(s.alphabet, ("#",))
    m2 = s.alphabet + ("#",)
    z2 = emptiness_test(m2)
    modes = ("T", "#")
    names = _Names(set(s.receiver_states)
                   | {_mode_name(p, x, y) for p in s.sender_states
                      for x in modes for y in modes})
    sender_states = [_mode_name(p, x, y) for p in s.sender_states
                     for x in modes for y in modes]
    sender_rules = []
    for p in s.sender_states:
        for y in modes:
            sender_rules.append(Rule(_mode_name(p, "T", y), R,
                                     Action.write("#"), _mode_name(p, "#", y)))
        for x in modes:
            sender_rules.append(Rule(_mode_name(p, x, "T"), L,
                                     Action.write("#"), _mode_name(p, x, "#")))
    for rule in s.sender_rules:
        act = rule.action
        if act.kind == "test":
            act = Action.test(z2)
        for x in modes:
            for y in modes:
                if rule.action.kind == "test":
                    if rule.channel == R and x == "#":
                        continue
                    if rule.channel == L and y == "#":
                        continue
                sender_rules.append(Rule(_mode_name(rule.source, x, y),
                                         rule.channel, act,
                                         _mode_name(rule.target, x, y)))

    receiver_states = list(s.receiver_states)
    receiver_rules = list(s.receiver_rules)
    q_f = names.fresh("q_f")
    qc1 = names.fresh("q_clean")
    up_lifted = inst.Up.with_alphabet(m2)
    vp_lifted = inst.Vp.with_alphabet(m2)
    up_trivial = _is_eps_language(inst.Up)
    vp_trivial = _is_eps_language(inst.Vp)
    v_entry = q_f if vp_trivial else names.fresh("q_clean.l")
    u_entry = v_entry if up_trivial else names.fresh("q_clean.r")
    receiver_states += [qc1, q_f]
    if not vp_trivial:
        receiver_states.append(v_entry)
    if not up_trivial:
        receiver_states.append(u_entry)
    receiver_rules.append(Rule(inst.q_fi, R, Action.read("#"), qc1))
    receiver_rules.append(Rule(qc1, L, Action.read("#"), u_entry))
    if not up_trivial:
        _emit_writer(up_lifted, R, u_entry, v_entry, Action.read, names,
                     receiver_states, receiver_rules)
    if not vp_trivial:
        _emit_writer(vp_lifted, L, v_entry, q_f, Action.read, names,
                     receiver_states, receiver_rules)
    system = Ucst(m2, sender_states, receiver_states, sender_rules,
                  receiver_rules)
    eps = Nfa.literal((), m2)
    return ReachInstance(system,
                         _mode_name(inst.p_in, "T", "T"),
                         _mode_name(inst.p_fi, "#", "#"),
                         inst.q_in, q_f, eps, eps, eps, eps)


# -- backward saturation -----------------------------------------------------------

def bounded_oracle(bound, mode=LOSSY):
    """Reachability oracle backed by the bounded explorer; positive answers
    are genuine, negative answers are bound-relative."""
    def oracle(inst):
        return bounded_reach(inst, bound, mode).reachable
    return oracle


def _normalize_target(s, target):
    """Target W as a dict (p, q) -> Nfa over the system alphabet."""
    if isinstance(target, dict):
        return dict(target)
    if isinstance(target, UpwardClosedSet):
        out = {}
        for c in target.minimal:
            lang = Nfa.literal(c.v, s.alphabet).upward_closure()
            key = (c.p, c.q)
            out[key] = lang if key not in out else out[key].union(lang)
        return out
    out = {}
    for c in target:
        if c.u != ():
            raise InputError("target configurations must have empty r")
        lang = Nfa.literal(c.v, s.alphabet)
        key = (c.p, c.q)
        out[key] = lang if key not in out else out[key].union(lang)
    return out


def _all_words_of_length(alphabet, length):
    syms = sorted(set(alphabet), key=symkey)
    words = [()]
    for _ in range(length):
        words = [w + (a,) for w in words for a in syms]
    return words


def pre_star_z1l(s, target, oracle, max_candidate_len=8):
    """Minimal elements of the r-empty configurations from which `target` is
    reachable; saturates an antichain with single-candidate oracle queries.

    The system may only carry Sender emptiness tests on l (losses make the
    result upward-closed for exactly this fragment).
    """
    if not classify_tests(s).only_z1l():
        raise FragmentError("backward saturation expects Sender l-emptiness tests only")
    wmap = {k: v for k, v in _normalize_target(s, target).items()
            if not v.is_empty()}
    eps = Nfa.literal((), s.alphabet)
    anyw = Nfa.all_words(s.alphabet)
    pairs = [(p, q) for p in s.sender_states for q in s.receiver_states]
    found = UpwardClosedSet.empty()
    while True:
        wprime = {}
        for (p, q) in pairs:
            ups = [Nfa.literal(c.v, s.alphabet).upward_closure()
                   for c in found.minimal if c.p == p and c.q == q]
            if not ups:
                wprime[(p, q)] = anyw
                continue
            union = ups[0]
            for extra in ups[1:]:
                union = union.union(extra)
            wprime[(p, q)] = union.complement()
        candidate = _find_candidate(s, oracle, pairs, wprime, wmap, eps,
                                    max_candidate_len)
        if candidate is None:
            return found
        found = found.insert(candidate)


def _find_candidate(s, oracle, pairs, wprime, wmap, eps, max_candidate_len):
    hit = False
    for (p, q) in pairs:
        if wprime[(p, q)].is_empty():
            continue
        for (p2, q2), goal in wmap.items():
            inst = ReachInstance(s, p, p2, q, q2, eps, wprime[(p, q)], eps, goal)
            if oracle(inst):
                hit = True
                break
        if hit:
            break
    if not hit:
        return None
    for length in range(max_candidate_len + 1):
        for v in _all_words_of_length(s.alphabet, length):
            for (p, q) in pairs:
                if not wprime[(p, q)].accepts(v):
                    continue
                lit = Nfa.literal(v, s.alphabet)
                for (p2, q2), goal in wmap.items():
                    inst = ReachInstance(s, p, p2, q, q2, eps, lit, eps, goal)
                    if oracle(inst):
                        return Configuration(p, q, (), v)
    raise OracleInconclusive(
        f"no backward candidate of length <= {max_candidate_len} though one must exist")


def decide_eereach_z1(inst, oracle, max_candidate_len=8, max_rounds=64):
    """Empty-to-empty reachability for Sender-emptiness-test systems, by
    iterated backward saturation over the runs between r-emptiness tests."""
    s = inst.system
    report = classify_tests(s)
    if not report.only_z1():
        raise FragmentError("decision procedure expects Sender-only emptiness tests")
    for nfa in inst.constraints():
        if not _is_eps_language(nfa):
            raise FragmentError("decision procedure expects an empty-to-empty instance")
    zr_rules = [s.rules[t.rule_id] for t in report.tests if t.channel == R]
    stripped = Ucst(s.alphabet, s.sender_states, s.receiver_states,
                    [r for r in s.sender_rules if r not in zr_rules],
                    s.receiver_rules)
    goal = Configuration(inst.p_fi, inst.q_fi, (), ())
    reached = pre_star_z1l(stripped, [goal], oracle, max_candidate_len)
    for _ in range(max_rounds):
        hops = [Configuration(rule.source, c.q, (), c.v)
                for rule in zr_rules for c in reached.minimal
                if c.p == rule.target]
        if not hops:
            break
        nxt = reached.union(
            pre_star_z1l(stripped, UpwardClosedSet.of(hops), oracle,
                         max_candidate_len))
        if nxt == reached:
            break
        reached = nxt
    else:
        raise OracleInconclusive("saturation did not stabilize within its round budget")
    return reached.contains(Configuration(inst.p_in, inst.q_in, (), ()))


# -- bridges to and from the Post embedding problem --------------------------------

def _rule_projections(s):
    read_r, write_r, read_l, write_l = {}, {}, {}, {}
    letters = tuple(f"d{i}" for i in range(len(s.rules)))
    for i, rule in enumerate(s.rules):
        a = letters[i]
        act = rule.action
        read_r[a] = (act.msg,) if act.kind == "read" and rule.channel == R else ()
        read_l[a] = (act.msg,) if act.kind == "read" and rule.channel == L else ()
        write_r[a] = (act.msg,) if act.kind == "write" and rule.channel == R else ()
        write_l[a] = (act.msg,) if act.kind == "write" and rule.channel == L else ()
    return letters, read_r, write_r, read_l, write_l


def bridge_context(inst):
    """Per-letter projections of an empty-to-empty Sender-l-emptiness instance."""
    s = inst.system
    if not classify_tests(s).only_z1l():
        raise FragmentError("PEP bridge expects Sender l-emptiness tests only")
    for nfa in inst.constraints():
        if not _is_eps_language(nfa):
            raise FragmentError("PEP bridge expects an empty-to-empty instance")
    letters, read_r, write_r, read_l, write_l = _rule_projections(s)
    tests = frozenset(letters[i] for i, rule in enumerate(s.rules)
                      if rule.action.kind == "test")
    return PreSolutionContext(
        instance=inst, letters=letters,
        rule_ids={a: i for i, a in enumerate(letters)},
        read_r=read_r, write_r=write_r, read_l=read_l, write_l=write_l,
        test_letters=tests)


def _path_nfa(states, rules, rule_letters, start, goal, sigma):
    idx = {st: i for i, st in enumerate(states)}
    trans = [(idx[rule.source], letter, idx[rule.target])
             for rule, letter in zip(rules, rule_letters)]
    return Nfa(sigma, len(states), {idx[start]}, {idx[goal]}, trans)


def ucst_to_pep(inst):
    """Post embedding instance whose solutions are the rule words of runs:
    letters are rules, images read and write the lossy channel, R forces
    reliable-channel writes to be read back immediately, and the codirect
    suffixes start at the emptiness tests."""
    ctx = bridge_context(inst)
    s = inst.system
    sigma = ctx.letters
    n1 = s.n_sender_rules
    p1 = _path_nfa(s.sender_states, s.sender_rules, sigma[:n1],
                   inst.p_in, inst.p_fi, sigma)
    p2 = _path_nfa(s.receiver_states, s.receiver_rules, sigma[n1:],
                   inst.q_in, inst.q_fi, sigma)
    # alternation of r-silent letters and write/read pairs on r; the middle
    # state must remember the written letter, one state per such letter
    written = tuple(dict.fromkeys(
        ctx.write_r[a][0] for a in sigma if ctx.write_r[a]))
    mid = {sym: i + 1 for i, sym in enumerate(written)}
    trans = []
    for a in sigma:
        if not ctx.write_r[a] and not ctx.read_r[a]:
            trans.append((0, a, 0))
        elif ctx.write_r[a]:
            trans.append((0, a, mid[ctx.write_r[a][0]]))
    for a in sigma:
        if ctx.read_r[a] and ctx.read_r[a][0] in mid:
            trans.append((mid[ctx.read_r[a][0]], a, 0))
    er_star = Nfa(sigma, 1 + len(written), {0}, {0}, trans)
    big_r = er_star.intersect(p1.shuffle(p2))
    rp = Nfa.one_of(sorted(ctx.test_letters), sigma).concat(Nfa.all_words(sigma))
    pep = PepInstance(sigma, s.alphabet, dict(ctx.read_l), dict(ctx.write_l),
                      big_r, rp)
    return pep


def pep_to_ucst(pinst):
    """Channel system that guesses a solution letter by letter: Sender tracks
    the R automaton and one state set of the complement-of-R' automaton (one
    fresh copy per committed position), writes the u image on r and the v
    image on l, and must drain l before any uncommitted position; Receiver
    reads matching letters off both channels."""
    rdfa = pinst.R.determinize()
    rp = pinst.Rp.determinize()
    not_rp_acc = frozenset(range(rp.n_states)) - rp.accepting
    rdist = rdfa.distances_to_accepting()
    comp_alive = Dfa(rp.alphabet, rp.n_states, rp.initial, not_rp_acc,
                     rp.transitions).distances_to_accepting()
    m = tuple(pinst.gamma)
    eps = Nfa.literal((), m)
    z_test = emptiness_test(m)
    receiver_states, receiver_rules = _proxy_receiver(m)
    names = _Names(receiver_states)
    core_name = {}

    def core(rs, copies):
        key = (rs, copies)
        if key not in core_name:
            core_name[key] = names.fresh(f"s{rs}_{len(core_name)}")
        return core_name[key]

    if rdist[rdfa.initial] is None:
        # R is empty: no solution and no run; emit the minimal dead instance
        system = Ucst(m, ("s_dead_in", "s_dead_fi"), receiver_states,
                      [], receiver_rules)
        return ReachInstance(system, "s_dead_in", "s_dead_fi",
                             "q_loop", "q_loop", eps, eps, eps, eps)

    start = (rdfa.initial, frozenset())
    todo = [start]
    seen = {start}
    sender_states = [core(*start)]
    sender_rules = []
    p_fi = names.fresh("p_fi")
    emit_after = []
    while todo:
        rs, copies = todo.pop(0)
        here = core(rs, copies)
        if rs in rdfa.accepting and set(copies) <= not_rp_acc:
            sender_rules.append(Rule(here, R, Action.nop(), p_fi))
        moves = []
        for a in sorted(pinst.sigma, key=symkey):
            rs2 = rdfa.step(rs, a)
            if rdist[rs2] is None:
                continue
            stepped = frozenset(rp.step(t, a) for t in copies)
            committed = stepped | {rp.step(rp.initial, a)}
            if all(comp_alive[t] is not None for t in stepped):
                moves.append((a, "wait", (rs2, stepped)))
            if all(comp_alive[t] is not None for t in committed):
                moves.append((a, "commit", (rs2, committed)))
        gates = {}
        for a, how, succ in moves:
            if how not in gates:
                gate = names.fresh(f"{here}.{how}")
                sender_states.append(gate)
                if how == "wait":
                    sender_rules.append(Rule(here, L, Action.test(z_test), gate))
                else:
                    sender_rules.append(Rule(here, R, Action.nop(), gate))
                gates[how] = gate
            if succ not in seen:
                seen.add(succ)
                sender_states.append(core(*succ))
                todo.append(succ)
            emit_after.append((gates[how], a, core(*succ)))
    for gate, a, target in emit_after:
        cur = gate
        writes = [(R, sym) for sym in pinst.u[a]] + [(L, sym) for sym in pinst.v[a]]
        for k, (ch, sym) in enumerate(writes):
            nxt = target if k == len(writes) - 1 else names.fresh(f"{gate}.{a}.{k}")
            if nxt != target:
                sender_states.append(nxt)
            sender_rules.append(Rule(cur, ch, Action.write(sym), nxt))
            cur = nxt
        if not writes:
            sender_rules.append(Rule(cur, R, Action.nop(), target))
    sender_states.append(p_fi)
    system = Ucst(m, sender_states, receiver_states,
                  sender_rules, receiver_rules)
    return ReachInstance(system, core(*start), p_fi, "q_loop", "q_loop",
                         eps, eps, eps, eps)


def _proxy_receiver(alphabet):
    """q_loop reading one letter from r then the same letter from l.

    The order matters here: if Receiver picked the letter off l first, it
    could smuggle a pre-wait l-letter past Sender's emptiness test and match
    it against a later r-letter, voiding the suffix conditions.
    """
    states = ["q_loop"]
    rules = []
    for sym in alphabet:
        aux = f"q_got_{sym}"
        states.append(aux)
        rules.append(Rule("q_loop", R, Action.read(sym), aux))
        rules.append(Rule(aux, L, Action.read(sym), "q_loop"))
    return states, rules


# -- pipeline driver -----------------------------------------------------------------

STAGE_ORDER = ("z1n1", "eg", "egz1", "eez1", "eez1l", "pep")


@dataclass
class PipelineStage:
    name: str
    instance: ReachInstance
    note: str


@dataclass
class PipelineTrace:
    stages: list
    pep: PepInstance = None

    @property
    def final_instance(self):
        return self.stages[-1].instance

    def report(self):
        lines = []
        for st in self.stages:
            s = st.instance.system
            frag = sorted(classify_tests(s).fragment())
            lines.append(
                f"{st.name}: |M|={len(s.alphabet)} |Q1|={len(s.sender_states)} "
                f"|Q2|={len(s.receiver_states)} |D1|={s.n_sender_rules} "
                f"|D2|={len(s.receiver_rules)} fragment={frag or ['-']}"
                + (f"  [{st.note}]" if st.note else ""))
        if self.pep is not None:
            lines.append(
                f"pep: |Sigma|={len(self.pep.sigma)} |Gamma|={len(self.pep.gamma)}")
        return "\n".join(lines)


def run_pipeline(inst, to="pep"):
    """Run the reduction prefix up to `to`, skipping stages whose feature is
    already absent; the trace records each stage and its bound-inflation note."""
    if to not in STAGE_ORDER:
        raise InputError(f"unknown pipeline target {to!r}")
    want = STAGE_ORDER.index(to)
    trace = PipelineTrace([PipelineStage("input", inst, "")])
    cur = inst
    report = classify_tests(cur.system)
    if not report.within({"Z", "N"}):
        raise FragmentError("pipeline expects emptiness/nonemptiness tests only")
    if report.has_receiver_tests():
        cur = elim_receiver_tests(cur)
        trace.stages.append(PipelineStage(
            "z1n1", cur,
            "channel bound +1 for the signal message plus one per traded "
            "nonemptiness test in a witness; reverse direction +0"))
    if want < STAGE_ORDER.index("eg"):
        return trace
    if not (_is_eps_language(cur.U) and _is_eps_language(cur.V)):
        cur = elim_initial(cur)
        trace.stages.append(PipelineStage(
            "eg", cur,
            "channel bound unchanged forward (initial words materialize in "
            "place); reverse direction needs the generated words to fit"))
    if want < STAGE_ORDER.index("egz1"):
        return trace
    if any(t.label == "N" for t in classify_tests(cur.system).tests):
        cur = elim_n1(cur)
        trace.stages.append(PipelineStage(
            "egz1", cur,
            "channel bound unchanged forward (buffers hold letters back); "
            "reverse direction +1 per channel for the buffered letter"))
    if want < STAGE_ORDER.index("eez1"):
        return trace
    if not (_is_eps_language(cur.Up) and _is_eps_language(cur.Vp)):
        cur = elim_final(cur)
        trace.stages.append(PipelineStage(
            "eez1", cur,
            "channel bound +1 for the marker; step bound +|final words|+2; "
            "reverse direction +0"))
    if want < STAGE_ORDER.index("eez1l"):
        return trace
    if not classify_tests(cur.system).only_z1l():
        raise FragmentError(
            "pipeline endpoint needs Sender emptiness tests on l only; "
            "r-emptiness tests require the saturation procedure instead")
    if want == STAGE_ORDER.index("eez1l"):
        if trace.stages[-1].instance is not cur:
            trace.stages.append(PipelineStage("eez1l", cur, ""))
        return trace
    trace.pep = ucst_to_pep(cur)
    if trace.stages[-1].instance is not cur:
        trace.stages.append(PipelineStage("eez1l", cur, ""))
    return trace
