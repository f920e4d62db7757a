"""Forge self-referential CNF instances that a given total classifier misclassifies.

Two tiers:

- The finite tier reproduces the two-formula toy construction: a space of
  formulas, a stipulated interpretation map ("formula i asserts: the
  classifier outputs UNSAT on formula j"), and a case analysis showing every
  classifier table gets the reflexive formula wrong.  The interpretation map
  is treated as authoritative even where it diverges from real CNF semantics
  (the negative unit clause is satisfiable); that stipulation is the whole
  point of the exercise and is confined to this tier.

- The full tier closes the loop for real: given a classifier program, build a
  diagonal program D that obtains its own serialization (SELF), runs the
  classifier inline on a formula delivered through pinned input cells, and
  accepts exactly when the classifier answers UNSAT.  The host closes the
  quine: it searches for a bound t with runtime(D) <= t, pinning exactly the
  cells D actually reads until the pin set reproduces itself (at most
  PIN_REFINEMENT_ROUNDS rounds).  The forged formula psi = encode(D, pins, t)
  is then satisfiable iff the classifier calls it UNSAT: wrong either way.

Classifiers that inspect a super-constant part of their input admit no
self-consistent bound under this bounded encoding; forge reports that
honestly as BoundNotFound with the full search transcript.
"""

from __future__ import annotations

import hashlib
import itertools
import struct
from dataclasses import dataclass

from .cnf import (
    SAT,
    UNSAT,
    Assignment,
    CnfFormula,
    Verdict,
    evaluate,
    solve_dpll,
)
from .errors import (
    ConstructionError,
    ContractViolation,
    InputError,
    ParseError,
    ResourceError,
)
from .machine import (
    ACCEPT,
    LOADI,
    OUT_OF_FUEL,
    REJECT,
    SELF,
    Instruction,
    Program,
    format_asm,
    parse_asm,
    run,
    run_recording_reads,
    serialize,
)
from .solver_adapter import SolverAdapterConfig, external_solver_check
from .tableau import encode, estimate_encode

CERT_MAGIC = "diagforge certificate v1"

SCRATCH_BASE = 0xF000  # where D deposits its own serialization; above any image
DPLL_VAR_LIMIT = 5000  # larger formulas go to the external solver
ENCODE_CLAUSE_BUDGET = 300_000
PIN_REFINEMENT_ROUNDS = 3
DEFAULT_CLASSIFIER_FUEL = 1_000_000


# The finite tier.


@dataclass(frozen=True)
class FiniteSpace:
    """A finite formula space with a stipulated self-referential reading.

    interpretation maps formula index i to a target j, read as: formula i
    encodes the claim "the classifier outputs UNSAT on formula j".
    """

    formulas: tuple[CnfFormula, ...]
    interpretation: tuple[tuple[int, int], ...]

    def __post_init__(self):
        seen = set()
        for i, j in self.interpretation:
            if not (0 <= i < len(self.formulas) and 0 <= j < len(self.formulas)):
                raise InputError(f"interpretation entry ({i}, {j}) out of range")
            if i in seen:
                raise InputError(f"formula {i} interpreted twice")
            seen.add(i)

    def claim_target(self, i: int) -> int | None:
        for a, b in self.interpretation:
            if a == i:
                return b
        return None


@dataclass(frozen=True)
class ClassifierTable:
    verdicts: tuple[str, ...]

    def __post_init__(self):
        for v in self.verdicts:
            if v not in (SAT, UNSAT):
                raise InputError(f"table verdict must be SAT or UNSAT, got {v!r}")


@dataclass(frozen=True)
class BranchAnalysis:
    assumed_verdict: str  # the classifier's hypothetical output at the fixed point
    claim_holds: bool  # does "classifier outputs UNSAT on it" hold under that assumption
    stipulated_status: str  # the status the formula then has under the interpretation
    consistent: bool  # assumed == stipulated; never true at a genuine fixed point


@dataclass(frozen=True)
class FixedPointReport:
    fixed_point_index: int | None
    misclassified: bool
    table_verdict: str | None
    case_analysis: tuple[BranchAnalysis, BranchAnalysis] | None


def finite_fixed_point(space: FiniteSpace, table: ClassifierTable) -> FixedPointReport:
    """Locate a reflexive formula and run both branches of the case analysis."""
    if len(table.verdicts) != len(space.formulas):
        raise InputError("table and space sizes differ")
    fixed = None
    for i in range(len(space.formulas)):
        if space.claim_target(i) == i:
            fixed = i
            break
    if fixed is None:
        return FixedPointReport(None, False, None, None)
    branches = []
    for assumed in (SAT, UNSAT):
        claim_holds = assumed == UNSAT
        stipulated = SAT if claim_holds else UNSAT
        branches.append(BranchAnalysis(assumed, claim_holds, stipulated, assumed == stipulated))
    actual = table.verdicts[fixed]
    actual_branch = branches[0] if actual == SAT else branches[1]
    return FixedPointReport(fixed, not actual_branch.consistent, actual, tuple(branches))


_SPACE_CATALOG = (
    ((1,),),  # p
    ((-1,),),  # ~p
    ((1,), (-1,)),  # p and ~p
    ((1, -1),),  # p or ~p
)


def minimal_space() -> FiniteSpace:
    """The two-formula space: p read as "output is SAT", ~p as "output is UNSAT"."""
    return self_describing_space(2)


def self_describing_space(k: int) -> FiniteSpace:
    """k distinct formulas; each claims about the next, the last about itself."""
    if not 2 <= k <= len(_SPACE_CATALOG):
        raise InputError(f"space size must be 2..{len(_SPACE_CATALOG)}")
    formulas = tuple(CnfFormula.of(1, cls) for cls in _SPACE_CATALOG[:k])
    interpretation = tuple((i, i + 1) for i in range(k - 1)) + ((k - 1, k - 1),)
    return FiniteSpace(formulas, interpretation)


def all_tables(k: int):
    for combo in itertools.product((SAT, UNSAT), repeat=k):
        yield ClassifierTable(combo)


# CNF memory image: the byte format classifier programs consume.
# Little-endian 16-bit words, one word per two cells:
#   word 0: num_vars, word 1: num_clauses, word 2: payload word count,
#   then per clause each literal as (var << 1) | sign and a 0 terminator.
# Fixed-width words mean literal sign flips never change the image length,
# which is what lets the quine close over pinned bytes.


def cnf_image(formula: CnfFormula) -> bytes:
    payload: list[int] = []
    for clause in formula.clauses:
        for lit in clause:
            payload.append((abs(lit) << 1) | (1 if lit < 0 else 0))
        payload.append(0)
    if formula.num_vars >= 1 << 15:
        raise InputError(f"image format caps variables at 32767, got {formula.num_vars}")
    if len(formula.clauses) >= 1 << 16:
        raise InputError("image format caps clauses at 65535")
    if len(payload) >= 1 << 16:
        raise InputError("image format caps payload at 65535 words")
    words = [formula.num_vars, len(formula.clauses), len(payload)] + payload
    return struct.pack(f"<{len(words)}H", *words)


def cnf_from_image(data: bytes) -> CnfFormula:
    if len(data) < 6 or len(data) % 2:
        raise InputError("malformed cnf image")
    words = struct.unpack(f"<{len(data) // 2}H", data)
    num_vars, num_clauses, payload_len = words[0], words[1], words[2]
    payload = words[3:]
    if len(payload) != payload_len:
        raise InputError("cnf image payload length mismatch")
    clauses = []
    clause: list[int] = []
    for w in payload:
        if w == 0:
            clauses.append(tuple(clause))
            clause = []
            continue
        var = w >> 1
        clause.append(-var if w & 1 else var)
    if clause:
        raise InputError("cnf image ends inside a clause")
    if len(clauses) != num_clauses:
        raise InputError("cnf image clause count mismatch")
    return CnfFormula(num_vars, tuple(clauses))


# Diagonal program construction.


def _flip_halts_and_shift(instructions, offset: int):
    out = []
    for ins in instructions:
        if ins.op == "HALT_ACCEPT":
            out.append(Instruction("HALT_REJECT"))
        elif ins.op == "HALT_REJECT":
            out.append(Instruction("HALT_ACCEPT"))
        elif ins.op == "JMP":
            out.append(Instruction("JMP", (ins.args[0] + offset,)))
        elif ins.op == "JZ":
            out.append(Instruction("JZ", (ins.args[0], ins.args[1] + offset)))
        else:
            out.append(ins)
    return out


def build_diagonal_program(classifier: Program, t: int) -> Program:
    """D: obtain own serialization, run the classifier inline, invert its verdict.

    The returned program does not depend on t in pinned-delivery mode (the
    bound only enters through the encoding); the parameter is kept so callers
    name the bound they are constructing for.
    """
    if t < 1:
        raise InputError("bound must be positive")
    if classifier.word_bits != 16:
        raise ConstructionError("classifiers must use 16-bit words")
    if classifier.memory_cells != 65536:
        raise ConstructionError("classifiers must declare 65536 memory cells")
    if classifier.register_count > 6:
        raise ConstructionError(
            "classifiers may use at most 6 registers (two are reserved)"
        )
    ops = {ins.op for ins in classifier.instructions}
    if "SELF" in ops:
        raise ConstructionError("classifiers must not contain SELF")
    if not ops & {"HALT_ACCEPT", "HALT_REJECT"}:
        raise ConstructionError(
            "classifier violates the verdict convention: it can never halt"
        )
    ra = classifier.register_count
    rb = ra + 1
    prefix = [LOADI(ra, SCRATCH_BASE), SELF(ra, rb)]
    body = _flip_halts_and_shift(classifier.instructions, len(prefix))
    return Program(
        tuple(prefix + body),
        register_count=classifier.register_count + 2,
        word_bits=16,
        memory_cells=65536,
    )


# Forge: doubling bound search with host-level quine closure.


@dataclass(frozen=True)
class TrialRecord:
    t: int
    steps: int | None  # steps used when D halted within fuel t, else None
    halted: bool
    note: str = ""


@dataclass(frozen=True)
class BoundNotFound:
    classifier_sha256: str
    t_cap: int
    transcript: tuple[TrialRecord, ...]


@dataclass(frozen=True)
class MisclassificationCertificate:
    classifier: Program
    classifier_sha256: str
    diagonal_program: Program
    bound_t: int
    pins: tuple[tuple[int, int], ...]
    forged: CnfFormula
    classifier_verdict: str
    oracle_verdict: Verdict
    transcript: tuple[TrialRecord, ...]


def classifier_hash(classifier: Program) -> str:
    return hashlib.sha256(serialize(classifier)).hexdigest()


def _attempt_bound(diagonal: Program, t: int):
    """Try one bound; returns (TrialRecord, payload or None).

    payload = (formula, image, pins, steps) when the bound is self-consistent
    and the pin set closed.
    """
    _, est_clauses, est_bytes = estimate_encode(diagonal, 0, t)
    if est_clauses > 2 * ENCODE_CLAUSE_BUDGET or est_bytes > 32 * SCRATCH_BASE:
        return TrialRecord(t, None, False, "formula too large at this bound"), None

    pins: tuple[tuple[int, int], ...] = ()
    formula = image = None
    for round_no in range(PIN_REFINEMENT_ROUNDS + 1):
        try:
            formula, _ = encode(diagonal, pins, t, max_clauses=ENCODE_CLAUSE_BUDGET)
        except ResourceError:
            return TrialRecord(t, None, False, "encoding exceeded the clause budget"), None
        try:
            image = cnf_image(formula)
        except InputError:
            return TrialRecord(t, None, False, "formula overflows the image format"), None
        if len(image) > SCRATCH_BASE:
            return (
                TrialRecord(t, None, False, "image collides with the quine scratch region"),
                None,
            )
        outcome, reads = run_recording_reads(diagonal, image, t)
        if outcome.tag == OUT_OF_FUEL:
            return TrialRecord(t, None, False, ""), None
        new_pins = tuple(
            sorted((a, image[a] if a < len(image) else 0) for a in reads)
        )
        if new_pins == pins:
            return TrialRecord(t, outcome.steps_used, True, ""), (
                formula,
                image,
                pins,
                outcome,
            )
        if round_no == PIN_REFINEMENT_ROUNDS:
            return TrialRecord(t, outcome.steps_used, True, "pin set did not stabilize"), None
        pins = new_pins
    raise ContractViolation("unreachable refinement state")  # pragma: no cover


def _oracle_verdict(formula: CnfFormula, solver: SolverAdapterConfig | None) -> Verdict:
    if formula.num_vars <= DPLL_VAR_LIMIT:
        return solve_dpll(formula)
    if solver is None:
        raise ResourceError(
            f"forged formula has {formula.num_vars} variables "
            f"(> {DPLL_VAR_LIMIT}); configure an external solver"
        )
    return external_solver_check(formula, solver)


def forge(
    classifier: Program,
    t_cap: int,
    solver: SolverAdapterConfig | None = None,
    classifier_fuel: int = DEFAULT_CLASSIFIER_FUEL,
) -> MisclassificationCertificate | BoundNotFound:
    """Search doubling bounds t = 4, 8, ... <= t_cap for a closed certificate.

    Deterministic: equal (classifier, t_cap) produce byte-identical
    certificates.
    """
    if t_cap < 4:
        raise InputError("t_cap must be at least 4")
    sha = classifier_hash(classifier)
    transcript: list[TrialRecord] = []
    t = 4
    while t <= t_cap:
        diagonal = build_diagonal_program(classifier, t)
        record, payload = _attempt_bound(diagonal, t)
        transcript.append(record)
        if payload is not None:
            formula, image, pins, outcome = payload
            cls_out = run(classifier, image, classifier_fuel)
            if cls_out.tag == OUT_OF_FUEL:
                raise ResourceError(
                    f"classifier {sha[:12]} exhausted {classifier_fuel} simulation steps"
                )
            classifier_verdict = SAT if cls_out.tag == ACCEPT else UNSAT
            if (outcome.tag == ACCEPT) != (cls_out.tag == REJECT):
                raise ContractViolation(
                    "diagonal run does not invert the classifier verdict"
                )
            oracle = _oracle_verdict(formula, solver)
            if oracle.tag == classifier_verdict:
                raise ContractViolation(
                    "forged formula failed to disagree with the classifier"
                )
            return MisclassificationCertificate(
                classifier=classifier,
                classifier_sha256=sha,
                diagonal_program=diagonal,
                bound_t=t,
                pins=pins,
                forged=formula,
                classifier_verdict=classifier_verdict,
                oracle_verdict=oracle,
                transcript=tuple(transcript),
            )
        t *= 2
    return BoundNotFound(sha, t_cap, tuple(transcript))


# Certificate verification and persistence.


@dataclass(frozen=True)
class CertificateCheck:
    ok: bool
    failed_check: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def verify_certificate(
    cert: MisclassificationCertificate,
    classifier_fuel: int = DEFAULT_CLASSIFIER_FUEL,
) -> CertificateCheck:
    """Re-check a certificate from scratch; only the certificate and the
    deterministic toolchain are consulted.

    Checks, in order: the classifier hash; the re-derivation of the forged
    formula from (diagonal program, bound, pins) including the pin closure
    and the bound covering D's runtime; the classifier's simulated verdict;
    the solver verdict; and the disagreement itself.
    """
    if classifier_hash(cert.classifier) != cert.classifier_sha256:
        return CertificateCheck(False, "classifier-hash")

    try:
        rebuilt = build_diagonal_program(cert.classifier, cert.bound_t)
        if rebuilt != cert.diagonal_program:
            return CertificateCheck(False, "re-derivation")
        formula, _ = encode(
            cert.diagonal_program, cert.pins, cert.bound_t, max_clauses=ENCODE_CLAUSE_BUDGET
        )
        if formula != cert.forged:
            return CertificateCheck(False, "re-derivation")
        image = cnf_image(cert.forged)
        for a, v in cert.pins:
            expected = image[a] if a < len(image) else 0
            if v != expected:
                return CertificateCheck(False, "re-derivation")
        d_out, reads = run_recording_reads(cert.diagonal_program, image, cert.bound_t)
        if d_out.tag == OUT_OF_FUEL:
            return CertificateCheck(False, "re-derivation")
        if tuple(sorted((a, image[a] if a < len(image) else 0) for a in reads)) != tuple(
            sorted(cert.pins)
        ):
            return CertificateCheck(False, "re-derivation")
    except (InputError, ConstructionError, ResourceError):
        return CertificateCheck(False, "re-derivation")

    cls_out = run(cert.classifier, image, classifier_fuel)
    if cls_out.tag == OUT_OF_FUEL:
        return CertificateCheck(False, "classifier-simulation")
    simulated = SAT if cls_out.tag == ACCEPT else UNSAT
    if simulated != cert.classifier_verdict:
        return CertificateCheck(False, "classifier-simulation")

    oracle = solve_dpll(cert.forged)
    if oracle.tag != cert.oracle_verdict.tag:
        return CertificateCheck(False, "oracle")
    if oracle.tag == SAT:
        if cert.oracle_verdict.witness is None or not evaluate(
            cert.forged, cert.oracle_verdict.witness
        ):
            return CertificateCheck(False, "oracle")

    if cert.classifier_verdict == cert.oracle_verdict.tag:
        return CertificateCheck(False, "disagreement")
    return CertificateCheck(True, None)


def _format_trial(r: TrialRecord) -> str:
    steps = "-" if r.steps is None else str(r.steps)
    halted = "yes" if r.halted else "no"
    return f"trial: t={r.t} steps={steps} halted={halted} note={r.note}"


def _parse_trial(line: str, lineno: int) -> TrialRecord:
    try:
        body = line[len("trial: "):]
        fields = body.split(" ", 3)
        t = int(fields[0].split("=", 1)[1])
        steps_tok = fields[1].split("=", 1)[1]
        steps = None if steps_tok == "-" else int(steps_tok)
        halted = fields[2].split("=", 1)[1] == "yes"
        note = fields[3].split("=", 1)[1] if len(fields) > 3 else ""
        return TrialRecord(t, steps, halted, note)
    except (IndexError, ValueError):
        raise ParseError("malformed trial record", lineno) from None


def certificate_dumps(cert: MisclassificationCertificate) -> str:
    from .cnf import dimacs_dumps

    lines = [
        CERT_MAGIC,
        f"classifier-sha256: {cert.classifier_sha256}",
        f"bound-t: {cert.bound_t}",
        f"classifier-verdict: {cert.classifier_verdict}",
        f"oracle-verdict: {cert.oracle_verdict.tag}",
    ]
    if cert.oracle_verdict.tag == SAT:
        model = " ".join(
            str(i + 1 if v else -(i + 1))
            for i, v in enumerate(cert.oracle_verdict.witness.values)
        )
        lines.append(f"oracle-model: {model} 0" if model else "oracle-model: 0")
    lines.append("pins: " + (" ".join(f"{a}:{v}" for a, v in cert.pins) or "-"))
    for r in cert.transcript:
        lines.append(_format_trial(r))
    lines.append("begin-classifier-asm")
    lines.append(format_asm(cert.classifier).rstrip("\n"))
    lines.append("end-classifier-asm")
    lines.append("begin-diagonal-asm")
    lines.append(format_asm(cert.diagonal_program).rstrip("\n"))
    lines.append("end-diagonal-asm")
    lines.append("begin-forged-dimacs")
    lines.append(dimacs_dumps(cert.forged).rstrip("\n"))
    lines.append("end-forged-dimacs")
    lines.append("end-certificate")
    return "\n".join(lines) + "\n"


def certificate_loads(text: str) -> MisclassificationCertificate:
    from .cnf import dimacs_loads

    lines = text.splitlines()
    if not lines or lines[0].strip() != CERT_MAGIC:
        raise ParseError(f"missing or wrong certificate magic line (want {CERT_MAGIC!r})", 1)

    headers: dict[str, str] = {}
    trials: list[TrialRecord] = []
    model_lits: list[int] | None = None
    sections: dict[str, list[str]] = {}
    current: str | None = None
    saw_end = False
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.rstrip("\n")
        if current is not None:
            if line.strip() == f"end-{current}":
                current = None
            else:
                sections[current].append(line)
            continue
        s = line.strip()
        if not s:
            continue
        if s == "end-certificate":
            saw_end = True
            break
        if s.startswith("begin-"):
            current = s[len("begin-"):]
            sections[current] = []
            continue
        if s.startswith("trial: "):
            trials.append(_parse_trial(s, lineno))
            continue
        if ": " in s:
            key, value = s.split(": ", 1)
            headers[key] = value
        elif s.endswith(":"):
            headers[s[:-1]] = ""
        else:
            raise ParseError(f"unrecognized certificate line {s!r}", lineno)
    if current is not None:
        raise ParseError(f"unterminated section {current!r}")
    if not saw_end:
        raise ParseError("missing end-certificate line")

    try:
        sha = headers["classifier-sha256"]
        bound_t = int(headers["bound-t"])
        classifier_verdict = headers["classifier-verdict"]
        oracle_tag = headers["oracle-verdict"]
        pins_text = headers["pins"]
        classifier = parse_asm("\n".join(sections["classifier-asm"]))
        diagonal = parse_asm("\n".join(sections["diagonal-asm"]))
        forged = dimacs_loads("\n".join(sections["forged-dimacs"]) + "\n")
    except KeyError as exc:
        raise ParseError(f"certificate is missing {exc.args[0]!r}") from None

    pins: tuple[tuple[int, int], ...] = ()
    if pins_text != "-":
        try:
            pins = tuple(
                (int(a), int(v))
                for a, v in (tok.split(":", 1) for tok in pins_text.split())
            )
        except ValueError:
            raise ParseError("malformed pins line") from None

    if oracle_tag == SAT:
        model_text = headers.get("oracle-model")
        if model_text is None:
            raise ParseError("SAT oracle verdict without a model")
        try:
            lits = [int(x) for x in model_text.split()]
        except ValueError:
            raise ParseError("malformed oracle model") from None
        if not lits or lits[-1] != 0:
            raise ParseError("oracle model must end with 0")
        model_lits = lits[:-1]
        values = [False] * forged.num_vars
        for lit in model_lits:
            if lit == 0 or abs(lit) > forged.num_vars:
                raise ParseError(f"model literal {lit} out of range")
            values[abs(lit) - 1] = lit > 0
        verdict = Verdict(SAT, Assignment(tuple(values)))
    elif oracle_tag == UNSAT:
        verdict = Verdict(UNSAT)
    else:
        raise ParseError(f"bad oracle verdict {oracle_tag!r}")

    if classifier_verdict not in (SAT, UNSAT):
        raise ParseError(f"bad classifier verdict {classifier_verdict!r}")

    return MisclassificationCertificate(
        classifier=classifier,
        classifier_sha256=sha,
        diagonal_program=diagonal,
        bound_t=bound_t,
        pins=pins,
        forged=forged,
        classifier_verdict=classifier_verdict,
        oracle_verdict=verdict,
        transcript=tuple(trials),
    )


def transcript_dumps(result: BoundNotFound) -> str:
    lines = [
        "diagforge bound-not-found v1",
        f"classifier-sha256: {result.classifier_sha256}",
        f"t-cap: {result.t_cap}",
    ]
    lines.extend(_format_trial(r) for r in result.transcript)
    return "\n".join(lines) + "\n"
