"""Party drivers: play a full outsourcing scenario against the contracts.

``run_scenario`` wires up a client, two clouds, an arbiter, and a cost sink
on a fresh ledger, then drives one engagement end to end under configurable
cloud strategies:

* ``coalition_role`` -- whether a cloud tries to initiate a bribery
  coalition, accepts/rejects one, or stays out of coalition politics;
* ``report_choice`` -- whether it betrays the coalition to the client with a
  correct or a wrong side-result (reporting without a real coalition
  fabricates a decoy coalition contract, which the client cannot
  distinguish from a genuine one);
* ``ctp_action`` -- what it delivers in the outsourcing contract: the true
  result ``f(x)``, the agreed cheap wrong result ``r``, some other wrong
  value, or nothing.

The driver enforces the protocol conventions: each cloud computes ``f(x)``
at most once (costs are transfers into the ``costs`` sink account), the
client always raises a dispute once a traitor's contract exists, and the
first report wins.  The outcome is labeled with the terminal node of the
corresponding extensive-form game family (G1 plain, G2 coalition, G3
reporting without coalition, G4 coalition plus reporting).
"""

from __future__ import annotations

import ast
import enum
import hashlib
import random
from dataclasses import dataclass
from typing import Optional

from .contracts import (
    CCState,
    ColludersContract,
    ContractError,
    PrisonersContract,
    TCState,
    TraitorsContract,
)
from .crypto import NeqProof, Opening, commit, digest, prove_eq, prove_neq, setup, verify_neq
from .ledger import AccountId, Ledger, Money, Params, validate_params

__all__ = [
    "Role",
    "ReportChoice",
    "CtpAction",
    "CloudStrategy",
    "Task",
    "Schedule",
    "Outcome",
    "ScenarioError",
    "run_scenario",
    "ttp_resolve",
    "PARTIES",
]

PARTIES = ("client", "cloud1", "cloud2", "ttp", "costs")


class ScenarioError(Exception):
    """Scenario-level configuration or invariant failure."""

    def __init__(self, code: str, message: str = "") -> None:
        super().__init__(message or code)
        self.code = code


class Role(enum.Enum):
    HONEST = "honest"
    INITIATE = "initiate"
    ACCEPT = "accept"
    REJECT = "reject"


class ReportChoice(enum.Enum):
    NO_REPORT = "no_report"
    REPORT_CORRECT = "report_correct"
    REPORT_WRONG = "report_wrong"


class CtpAction(enum.Enum):
    FX = "fx"  # deliver the true result
    R = "r"  # deliver the agreed cheap wrong result
    OTHER = "other"  # deliver some other wrong value
    WITHHOLD = "withhold"  # deliver nothing


@dataclass(frozen=True)
class CloudStrategy:
    coalition_role: Role = Role.HONEST
    report_choice: ReportChoice = ReportChoice.NO_REPORT
    ctp_action: CtpAction = CtpAction.FX


@dataclass(frozen=True)
class Task:
    """The outsourced computation.

    ``iterated-hash``: y = SHA-256 applied ``rounds`` times to ``x`` (hex).
    ``arithmetic-expression``: y = decimal encoding of ``expr`` evaluated at
    integer ``x`` (operators ``+ - * **`` only).
    ``cost`` overrides the per-execution compute cost (defaults to params.c).
    """

    kind: str = "iterated-hash"
    x: str = "00"
    rounds: int = 2
    expr: str = "x"
    cost: Optional[Money] = None

    def description_bytes(self) -> bytes:
        if self.kind == "iterated-hash":
            return b"iterated-hash|rounds=%d" % self.rounds
        if self.kind == "arithmetic-expression":
            return b"arithmetic-expression|" + self.expr.encode()
        raise ScenarioError("invalid-task", f"unknown task kind {self.kind!r}")

    def input_bytes(self) -> bytes:
        if self.kind == "iterated-hash":
            try:
                return bytes.fromhex(self.x)
            except ValueError as exc:
                raise ScenarioError("invalid-task", f"bad hex input: {exc}") from exc
        return self.x.encode()

    def evaluate(self) -> bytes:
        if self.kind == "iterated-hash":
            if not 1 <= self.rounds <= 10_000:
                raise ScenarioError("invalid-task", "rounds out of range")
            data = self.input_bytes()
            for _ in range(self.rounds):
                data = hashlib.sha256(data).digest()
            return data
        if self.kind == "arithmetic-expression":
            try:
                x = int(self.x)
            except ValueError as exc:
                raise ScenarioError("invalid-task", f"bad integer input: {exc}") from exc
            return str(_eval_arith(self.expr, x)).encode()
        raise ScenarioError("invalid-task", f"unknown task kind {self.kind!r}")


def _eval_arith(expr: str, x: int) -> int:
    """Evaluate a tiny arithmetic language over one variable, safely."""
    try:
        tree = ast.parse(expr, mode="eval").body
    except SyntaxError as exc:
        raise ScenarioError("invalid-task", f"bad expression: {exc}") from exc

    def ev(node: ast.AST) -> int:
        if isinstance(node, ast.BinOp):
            left, right = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Add):
                return left + right
            if isinstance(node.op, ast.Sub):
                return left - right
            if isinstance(node.op, ast.Mult):
                return left * right
            if isinstance(node.op, ast.Pow):
                if right < 0 or right > 64 or abs(left) > 2**64:
                    raise ScenarioError("invalid-task", "exponent out of range")
                return left**right
        elif isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            value = ev(node.operand)
            return -value if isinstance(node.op, ast.USub) else value
        elif isinstance(node, ast.Constant) and isinstance(node.value, int):
            return node.value
        elif isinstance(node, ast.Name) and node.id == "x":
            return x
        raise ScenarioError("invalid-task", f"unsupported syntax in {expr!r}")

    return ev(tree)


@dataclass(frozen=True)
class Schedule:
    """Contract deadlines: bid by T1, deliver by T2, settle by T3; coalition
    joining closes at T4 and its enforcement opens at T5."""

    T1: int = 10
    T2: int = 20
    T3: int = 30
    T4: int = 15
    T5: int = 35


@dataclass(frozen=True)
class Outcome:
    terminal_label: str
    game_family: str
    deltas: dict[str, Money]
    roles: dict[str, str]
    transcript: tuple[dict, ...]
    settlement_clauses: tuple[str, ...]


# ---------------------------------------------------------------------------
# Deterministic scenario values
# ---------------------------------------------------------------------------


def _derive_distinct_values(gp, task: Task, seed: int) -> dict[str, bytes]:
    """Derive the shared cheap result ``r`` and per-cloud wrong values so all
    committed digests are pairwise distinct (required so other-vs-other
    mismatches stay mismatches even in the toy group)."""
    y_true = task.evaluate()
    values: dict[str, bytes] = {"y_true": y_true}
    taken = {digest(gp, y_true)}
    for name in ("r", "other1", "other2", "ywrong"):
        counter = 0
        while True:
            candidate = b"%s|%d|%d" % (name.encode(), seed, counter)
            dg = digest(gp, candidate)
            if dg not in taken:
                taken.add(dg)
                values[name] = candidate
                break
            counter += 1
    return values


# ---------------------------------------------------------------------------
# Arbiter driver
# ---------------------------------------------------------------------------


def ttp_resolve(ctp: PrisonersContract, task: Task, received: dict[AccountId, Opening], rng) -> Opening:
    """The arbiter recomputes the result and settles the dispute.

    ``received`` holds the per-cloud result openings the client forwarded.
    Returns the arbiter's own result opening (forwarded back to the client,
    who may need it to prove a reporter's side-commitment correct).
    """
    gp = ctp.gp
    m_true = digest(gp, task.evaluate())
    s_t = rng.randrange(gp.q)
    com_yt = commit(gp, m_true, s_t)
    opening_t = Opening(m_true, s_t)
    nizks = []
    for worker in ctp.workers:
        com_y = ctp.delivered.get(worker)
        opening = received.get(worker)
        if com_y is None or opening is None or commit(gp, opening.m, opening.s) != com_y:
            nizks.append(None)
        elif opening.m % gp.q == m_true:
            nizks.append(prove_eq(gp, com_y, com_yt, opening, opening_t, rng))
        else:
            nizks.append(_prove_neq_complete(gp, com_y, com_yt, opening, opening_t, rng))
    ctp.dispute(ctp.ttp, com_yt, nizks[0], nizks[1])
    return opening_t


def _prove_neq_complete(gp, c1, c2, o1, o2, rng) -> NeqProof:
    """Produce an inequality proof that is guaranteed to verify.

    The proof's disequality check degenerates when the hash challenge is
    0 mod q -- a 1/q statistical completeness gap that the tiny test group
    actually hits -- so the prover checks its own proof and re-proves with
    fresh randomness until it passes (one round, almost always).
    """
    for _ in range(64):
        proof = prove_neq(gp, c1, c2, o1, o2, rng)
        if verify_neq(gp, c1, c2, proof):
            return proof
    raise ScenarioError("proof-retry-exhausted",
                        "could not produce a verifying inequality proof")


# ---------------------------------------------------------------------------
# Scenario engine
# ---------------------------------------------------------------------------


def _action_index(action: CtpAction) -> int:
    return {CtpAction.FX: 0, CtpAction.R: 1, CtpAction.OTHER: 2, CtpAction.WITHHOLD: 2}[action]


def run_scenario(
    params: Params,
    task: Task,
    strat1: CloudStrategy,
    strat2: CloudStrategy,
    seed: int = 0,
    group: str = "toy",
    traitor_enabled: Optional[bool] = None,
    schedule: Optional[Schedule] = None,
) -> Outcome:
    violations = validate_params(params)
    if violations:
        raise ScenarioError("invalid-params", "; ".join(violations))
    sched = schedule or Schedule()
    if not (2 <= sched.T1 < sched.T2 < sched.T3 < sched.T5 and 4 < sched.T4 < sched.T2 and sched.T2 > 5 and sched.T3 > sched.T2 + 1):
        raise ScenarioError("invalid-schedule", f"{sched}")

    reports = (strat1.report_choice, strat2.report_choice)
    any_report = any(rc is not ReportChoice.NO_REPORT for rc in reports)
    if traitor_enabled is None:
        traitor_enabled = any_report
    if any_report and not traitor_enabled:
        raise ScenarioError("inconsistent-strategies", "reporting requires the traitor module")
    if strat1.coalition_role is Role.INITIATE and strat2.coalition_role is Role.INITIATE:
        raise ScenarioError("inconsistent-strategies", "two initiators")

    gp = setup(group, b"\x01")
    rng = random.Random(seed)
    task_cost = params.c if task.cost is None else task.cost
    if task_cost <= 0:
        raise ScenarioError("invalid-task", "cost must be positive")

    client = AccountId("client")
    clouds = (AccountId("cloud1"), AccountId("cloud2"))
    ttp = AccountId("ttp")
    costs = AccountId("costs", kind="sink")
    w, c, ch, d, t, b = params.w, task_cost, params.ch, params.d, params.t, params.b
    funding = {
        client: 3 * w + 2 * d,
        clouds[0]: d + t + b + ch + c,
        clouds[1]: d + t + b + ch + c,
        ttp: 0,
        costs: 0,
    }
    ledger = Ledger(dict(funding))
    initial = ledger.snapshot()

    values = _derive_distinct_values(gp, task, seed)
    m_true = digest(gp, values["y_true"])
    m_r = digest(gp, values["r"])
    strategies = {clouds[0]: strat1, clouds[1]: strat2}

    # --- create the outsourcing contract at t=0 -----------------------------
    com_f = commit(gp, digest(gp, task.description_bytes()), rng.randrange(gp.q))
    com_x = commit(gp, digest(gp, task.input_bytes()), rng.randrange(gp.q))
    ctp = PrisonersContract.create(
        ledger, gp, client, ttp, com_f, com_x, w, d, ch, sched.T1, sched.T2, sched.T3
    )

    ledger.advance_time(1)
    for cloud in clouds:
        ctp.bid(cloud)

    # --- coalition attempt at t=2 -------------------------------------------
    initiator = next((cl for cl in clouds if strategies[cl].coalition_role is Role.INITIATE), None)
    responder = None if initiator is None else clouds[1 - clouds.index(initiator)]
    coalition_attempt = initiator is not None
    # both parties learn r and the two blindings off-chain when the offer is made
    s_r = {clouds[0]: rng.randrange(gp.q), clouds[1]: rng.randrange(gp.q)}
    com_r = {cl: commit(gp, m_r, s_r[cl]) for cl in clouds}
    ctc: Optional[ColludersContract] = None
    ledger.advance_time(1)
    if coalition_attempt:
        ctc = ColludersContract.create(
            ledger, ctp, initiator, responder, t, b, sched.T4, sched.T5,
            com_r_creator=com_r[initiator], com_r_other=com_r[responder],
        )

    # --- reporting at t=3 -----------------------------------------------------
    # A responder who was actually offered a coalition reports first (it
    # reacts to the offer); otherwise cloud order decides.  Only the first
    # report is accepted by the client (contract enforces it too).
    ledger.advance_time(1)
    candidates = [cl for cl in clouds if strategies[cl].report_choice is not ReportChoice.NO_REPORT]
    if coalition_attempt and responder in candidates:
        candidates.sort(key=lambda cl: 0 if cl == responder else 1)
    ctt: Optional[TraitorsContract] = None
    reporter: Optional[AccountId] = None
    suppressed_join = False
    client_view: dict = {"y_openings": {}, "yprime": None, "yt": None}
    for candidate in candidates:
        if ctt is not None:
            ledger.record("protocol/report-denied", actor=candidate)
            continue
        reported_ctc = ctc
        if reported_ctc is None:
            # fabricate a decoy coalition contract to have something to report;
            # the client cannot tell it from a genuine offer
            peer = clouds[1 - clouds.index(candidate)]
            reported_ctc = ColludersContract.create(
                ledger, ctp, candidate, peer, t, b, sched.T4, sched.T5,
                com_r_creator=commit(gp, m_r, rng.randrange(gp.q)),
                com_r_other=commit(gp, m_r, rng.randrange(gp.q)),
            )
        try:
            ctt = TraitorsContract.create(ledger, ctp, reported_ctc, client, candidate)
        except ContractError as exc:
            if exc.code != "not-first-reporter":
                raise
            ledger.record("protocol/report-denied", actor=candidate)
            continue
        reporter = candidate
        ctt.join(candidate)
        if candidate == initiator:
            # the ringleader reported its own attempt; the responder backs off
            suppressed_join = True

    # --- coalition joining + traitor side-delivery at t=4 --------------------
    ledger.advance_time(1)
    coalition_formed = False
    if coalition_attempt and strategies[responder].coalition_role is Role.ACCEPT and not suppressed_join:
        ctc.join(responder)
        coalition_formed = True

    computed: set[AccountId] = set()

    def charge_compute(cloud: AccountId) -> None:
        if cloud not in computed:
            computed.add(cloud)
            ledger.transfer(cloud, costs, task_cost, tag="protocol/compute-cost")

    if ctt is not None:
        choice = strategies[reporter].report_choice
        if choice is ReportChoice.REPORT_CORRECT:
            charge_compute(reporter)
            m_prime = m_true
        else:
            m_prime = digest(gp, values["ywrong"])
        s_prime = rng.randrange(gp.q)
        ctt.deliver(reporter, commit(gp, m_prime, s_prime))
        client_view["yprime"] = Opening(m_prime, s_prime)

    # --- deliveries in the outsourcing contract at t=5 ------------------------
    ledger.advance_time(1)
    for idx, cloud in enumerate(clouds):
        action = strategies[cloud].ctp_action
        if action is CtpAction.WITHHOLD:
            continue
        if action is CtpAction.FX:
            charge_compute(cloud)
            m_y, s_y = m_true, rng.randrange(gp.q)
            com_y = commit(gp, m_y, s_y)
        elif action is CtpAction.R:
            if coalition_attempt:
                # deliver exactly the commitment registered in the coalition
                # contract so conformance is recognized at enforcement
                com_y, s_y, m_y = com_r[cloud], s_r[cloud], m_r
            else:
                m_y, s_y = m_r, rng.randrange(gp.q)
                com_y = commit(gp, m_y, s_y)
        else:  # OTHER: a private wrong value
            m_y = digest(gp, values[f"other{idx + 1}"])
            s_y = rng.randrange(gp.q)
            com_y = commit(gp, m_y, s_y)
        ctp.deliver(cloud, com_y)
        client_view["y_openings"][cloud] = Opening(m_y, s_y)

    # --- settlement just after T2 ---------------------------------------------
    ledger.advance_time(sched.T2 + 1 - ledger.clock)
    ttp_rng = random.Random(seed ^ 0x5EED)
    if ctt is not None:
        # clause 7: the client must dispute, whatever was delivered
        client_view["yt"] = ttp_resolve(ctp, task, client_view["y_openings"], ttp_rng)
        if ctt.state is TCState.COMPUTED:
            o_prime, o_t = client_view["yprime"], client_view["yt"]
            if o_prime is not None and o_prime.m % gp.q == o_t.m % gp.q:
                proof = prove_eq(
                    gp, ctt.com_yprime, ctp.dispute_record.com_yt, o_prime, o_t, ttp_rng
                )
            else:
                proof = None
            ctt.check(client, proof)
    else:
        openings = client_view["y_openings"]
        if len(ctp.delivered) == 0:
            ctp.pay(client, None)
        elif len(ctp.delivered) == 2:
            o1, o2 = (openings.get(cl) for cl in clouds)
            if o1 is not None and o2 is not None and o1.m % gp.q == o2.m % gp.q:
                proof = prove_eq(gp, ctp.delivered[clouds[0]], ctp.delivered[clouds[1]], o1, o2, ttp_rng)
                ctp.pay(client, proof)
            else:
                client_view["yt"] = ttp_resolve(ctp, task, openings, ttp_rng)
        else:
            client_view["yt"] = ttp_resolve(ctp, task, openings, ttp_rng)

    # --- coalition enforcement after T5 ----------------------------------------
    ledger.advance_time(sched.T5 + 1 - ledger.clock)
    if ctc is not None and ctc.state is CCState.COLLUDED:
        ctc.enforce(ctc.creator)
    ledger.advance_time(5)

    # --- invariants --------------------------------------------------------------
    ledger.check_conservation()
    for contract in [ctp, ctc, ctt]:
        if contract is None:
            continue
        if contract.state.value not in ("DONE", "ABORTED"):
            raise ScenarioError("invariant-breach", f"{contract.account.id} ended {contract.state.value}")
    for acct, balance in ledger.balances.items():
        if acct.kind == "contract" and balance != 0:
            raise ScenarioError("invariant-breach", f"escrow {acct.id} holds {balance}")

    final = ledger.snapshot()
    name_of = {client: "client", clouds[0]: "cloud1", clouds[1]: "cloud2", ttp: "ttp", costs: "costs"}
    deltas = {name_of[acct]: final.get(acct, 0) - initial.get(acct, 0) for acct in funding}

    label, family, roles = _label_outcome(
        clouds, strategies, initiator, responder, reporter,
        coalition_formed, traitor_enabled, name_of,
    )
    clauses = tuple(
        entry["tag"] for entry in ledger.log
        if "/pay/" in entry.get("tag", "") or "/dispute/" in entry.get("tag", "")
        or "/enforce/" in entry.get("tag", "") or "/check/" in entry.get("tag", "")
    )
    return Outcome(
        terminal_label=label,
        game_family=family,
        deltas=deltas,
        roles=roles,
        transcript=tuple(ledger.log),
        settlement_clauses=clauses,
    )


def _label_outcome(clouds, strategies, initiator, responder, reporter,
                   coalition_formed, traitor_enabled, name_of):
    """Map the scenario to a terminal node of the matching game family."""
    act = {cl: _action_index(strategies[cl].ctp_action) for cl in clouds}
    if coalition_formed:
        leader, follower = initiator, responder
        if reporter is not None:
            rep = 1 if strategies[reporter].report_choice is ReportChoice.REPORT_CORRECT else 2
        else:
            rep = 0
        if reporter is not None or traitor_enabled:
            n = 15 + 9 * rep + 3 * act[leader] + act[follower]
            family = "G4"
        else:
            n = 6 + 3 * act[leader] + act[follower]
            family = "G2"
        roles = {name_of[leader]: "LDR", name_of[follower]: "FLR"}
    elif reporter is not None:
        other = clouds[1 - clouds.index(reporter)]
        rep = 1 if strategies[reporter].report_choice is ReportChoice.REPORT_CORRECT else 2
        n = 13 + 9 * rep + 3 * act[other] + act[reporter]
        family = "G3"
        roles = {name_of[other]: "OTH", name_of[reporter]: "TRA"}
    elif traitor_enabled:
        # a world with the traitor module but no report: cloud2 is the
        # designated would-be reporter by convention
        other, tra = clouds
        n = 13 + 3 * act[other] + act[tra]
        family = "G3"
        roles = {name_of[other]: "OTH", name_of[tra]: "TRA"}
    else:
        n = 4 + 3 * act[clouds[0]] + act[clouds[1]]
        family = "G1"
        roles = {name_of[clouds[0]]: "C1", name_of[clouds[1]]: "C2"}
    return f"{family}:v{n}", family, roles
