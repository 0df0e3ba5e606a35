"""Deterministic in-memory ledger: accounts, clock, transfers, timers.

Money is integral (smallest currency unit).  The ledger never creates or
destroys funds after initial minting; every movement is a transfer between
accounts, and ``total()`` is invariant.  Compute costs are modeled as
transfers into a dedicated sink account (kind ``"sink"``) so that
conservation holds exactly over *all* accounts while the external parties'
deltas sum to minus the sink delta.

Contracts register themselves to receive timer callbacks; ``advance_time``
moves the clock once and then runs every registered timer to a fixed point,
which makes one jump of ``dt`` equivalent to ``dt`` unit steps (all timer
guards are monotone in the clock).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

__all__ = [
    "Money",
    "AccountId",
    "Params",
    "LedgerError",
    "Ledger",
    "validate_params",
    "advance_time",
    "transfer",
]

#: Integral money in the smallest currency unit.
Money = int


class LedgerError(Exception):
    """Monetary precondition failure; ``code`` is a stable identifier."""

    def __init__(self, code: str, message: str = "") -> None:
        super().__init__(message or code)
        self.code = code


@dataclass(frozen=True)
class AccountId:
    """A named account; ``kind`` is one of ``external``, ``contract``, ``sink``."""

    id: str
    kind: str = "external"


@dataclass(frozen=True)
class Params:
    """The monetary parameters of one outsourcing engagement.

    w   payment per cloud for the computation
    c   a cloud's cost of actually running the computation
    ch  the arbiter's fee (also the traitor-contract entry stake)
    d   a cloud's deposit in the prisoner's contract
    t   deposit in the colluder's contract
    b   bribe offered for colluding
    z = w - c + d - ch is the payoff of a cloud that wins a dispute.
    """

    w: Money
    c: Money
    ch: Money
    d: Money
    t: Money
    b: Money

    @property
    def z(self) -> Money:
        return self.w - self.c + self.d - self.ch


def validate_params(params: Params) -> list[str]:
    """Return the violated constraint strings (empty when all hold).

    The constraints make honesty dominant and collusion self-defeating:
    ``w >= c``, ``ch > 2w``, ``d > c + ch``, ``b < c``, ``t > z + d - b``,
    plus positivity of every amount.
    """
    violations: list[str] = []
    for name in ("w", "c", "ch", "d", "t", "b"):
        value = getattr(params, name)
        if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
            violations.append(f"{name} > 0")
    if violations:
        return violations
    if not params.w >= params.c:
        violations.append("w >= c")
    if not params.ch > 2 * params.w:
        violations.append("ch > 2w")
    if not params.d > params.c + params.ch:
        violations.append("d > c + ch")
    if not params.b < params.c:
        violations.append("b < c")
    if not params.t > params.z + params.d - params.b:
        violations.append("t > z + d - b")
    return violations


class Ledger:
    """Accounts, balances, a monotone clock, and an append-only event log."""

    def __init__(self, balances: dict[AccountId, Money], start_time: int = 0) -> None:
        for acct, amount in balances.items():
            if not isinstance(amount, int) or amount < 0:
                raise LedgerError("bad-amount", f"negative mint for {acct.id}")
        self.balances: dict[AccountId, Money] = dict(balances)
        self.clock: int = start_time
        self.log: list[dict] = []
        self._timers: list[Callable[[], bool]] = []
        self._minted: Money = sum(balances.values())
        self._seq: int = 0

    def fresh_account(self, prefix: str, kind: str = "contract") -> AccountId:
        """Mint a unique zero-balance account (used for contract escrows)."""
        self._seq += 1
        acct = AccountId(f"{prefix}#{self._seq}", kind=kind)
        self.ensure_account(acct)
        return acct

    # -- bookkeeping ---------------------------------------------------------

    def total(self) -> Money:
        return sum(self.balances.values())

    def balance(self, acct: AccountId) -> Money:
        return self.balances.get(acct, 0)

    def ensure_account(self, acct: AccountId) -> None:
        self.balances.setdefault(acct, 0)

    def snapshot(self) -> dict[AccountId, Money]:
        return dict(self.balances)

    def record(self, tag: str, actor: Optional[AccountId] = None, **detail) -> None:
        entry: dict = {"time": self.clock, "tag": tag}
        if actor is not None:
            entry["actor"] = actor.id
        if detail:
            entry.update(detail)
        self.log.append(entry)

    # -- money movement --------------------------------------------------------

    def transfer(self, src: AccountId, dst: AccountId, amount: Money, tag: str = "transfer") -> None:
        if not isinstance(amount, int) or isinstance(amount, bool) or amount < 0:
            raise LedgerError("bad-amount", f"transfer of {amount!r}")
        if self.balances.get(src, 0) < amount:
            raise LedgerError(
                "insufficient-funds",
                f"{src.id} has {self.balances.get(src, 0)}, needs {amount}",
            )
        if amount == 0:
            return
        self.ensure_account(dst)
        self.balances[src] -= amount
        self.balances[dst] += amount
        self.record(tag, actor=src, to=dst.id, amount=amount)

    # -- time -----------------------------------------------------------------

    def register_timer(self, callback: Callable[[], bool]) -> None:
        """Register a timer callback returning True when it made progress."""
        self._timers.append(callback)

    def advance_time(self, dt: int) -> None:
        if not isinstance(dt, int) or isinstance(dt, bool) or dt < 1:
            raise LedgerError("bad-dt", f"dt must be a positive int, got {dt!r}")
        self.clock += dt
        progressed = True
        while progressed:
            progressed = False
            for callback in self._timers:
                if callback():
                    progressed = True

    # -- integrity --------------------------------------------------------------

    def check_conservation(self) -> None:
        if self.total() != self._minted:
            raise LedgerError(
                "conservation-violated",
                f"total {self.total()} != minted {self._minted}",
            )


def advance_time(ledger: Ledger, dt: int) -> None:
    """Module-level convenience wrapper around ``Ledger.advance_time``."""
    ledger.advance_time(dt)


def transfer(ledger: Ledger, src: AccountId, dst: AccountId, amount: Money, tag: str = "transfer") -> None:
    """Module-level convenience wrapper around ``Ledger.transfer``."""
    ledger.transfer(src, dst, amount, tag)
