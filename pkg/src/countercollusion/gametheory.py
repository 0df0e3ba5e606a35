"""Extensive-form game engine for the four outsourcing game families.

Builds the game trees induced by the contract suite (``g1`` plain
outsourcing, ``g2`` with a bribery coalition, ``g3`` with betrayal reporting,
``g4`` with both), evaluates behavior-strategy assessments in exact rational
arithmetic, and machine-checks the two halves of sequential equilibrium:

* **sequential rationality** -- at every information set, the prescribed
  strategy maximizes the owner's expected payoff under the stated beliefs.
  Three granularities are reported: the weak test against *all* alternative
  strategies of the owner (gain must be <= 0), the strict test against
  one-shot deviations at the set itself (every other action must do strictly
  worse), and per-node action dominance (with declared tie exemptions where
  several actions are exactly payoff-equal).
* **consistency** -- the assessment is the limit of fully-mixed strategy
  profiles with Bayes-derived beliefs; ``consistency_sequence`` constructs
  the canonical 1/k mixture and ``check_consistency`` measures the exact
  sup-distance residual, which is 2/k for all four reference equilibria.

``payoff_crosscheck`` closes the loop with the executable protocol: every
terminal of a game tree is replayed as a full contract scenario and the
ledger deltas must equal the tree's utilities exactly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional

from .ledger import Params, validate_params

__all__ = [
    "GameError",
    "Node",
    "InfoSet",
    "Game",
    "Assessment",
    "build_game",
    "reference_equilibrium",
    "node_value",
    "expected_payoff",
    "outcome_distribution",
    "play",
    "check_sequential_rationality",
    "bayes_beliefs",
    "consistency_sequence",
    "assessment_distance",
    "check_consistency",
    "analyze_reference",
    "payoff_crosscheck",
    "GAME_IDS",
]

GAME_IDS = ("g1", "g2", "g3", "g4")

_ACTS = ("fx", "r", "other")


class GameError(Exception):
    """Game-structure or assessment failure; ``code`` is a stable identifier."""

    def __init__(self, code: str, message: str = "") -> None:
        super().__init__(message or code)
        self.code = code


# ---------------------------------------------------------------------------
# Structure
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Node:
    """One tree node: a decision point (player/info_set/children) or a
    terminal (utilities/label)."""

    node_id: str
    player: Optional[int] = None
    info_set: Optional[str] = None
    children: Optional[Mapping[str, str]] = None  # action -> child node id
    utilities: Optional[tuple[Fraction, Fraction]] = None
    label: Optional[str] = None

    @property
    def is_terminal(self) -> bool:
        return self.utilities is not None

    @property
    def actions(self) -> tuple[str, ...]:
        return tuple(self.children) if self.children else ()


@dataclass(frozen=True)
class InfoSet:
    set_id: str
    player: int
    nodes: tuple[str, ...]
    actions: tuple[str, ...]


class Game:
    """A validated two-player extensive-form game with imperfect information."""

    def __init__(
        self,
        game_id: str,
        params: Params,
        nodes: dict[str, Node],
        info_sets: dict[str, InfoSet],
        root: str = "v0",
        player_roles: Optional[dict[int, str]] = None,
    ) -> None:
        self.game_id = game_id
        self.params = params
        self.nodes = nodes
        self.info_sets = info_sets
        self.root = root
        self.player_roles = player_roles or {1: "P1", 2: "P2"}
        self.parents: dict[str, tuple[str, str]] = {}  # node -> (parent, action)
        self._validate()

    # -- validation -----------------------------------------------------------

    def _validate(self) -> None:
        if self.root not in self.nodes:
            raise GameError("bad-structure", f"missing root {self.root}")
        seen: set[str] = set()
        stack = [self.root]
        while stack:
            nid = stack.pop()
            if nid in seen:
                raise GameError("bad-structure", f"{nid} reached twice (not a tree)")
            seen.add(nid)
            node = self.nodes[nid]
            self._validate_node(node)
            for action, child in (node.children or {}).items():
                if child not in self.nodes:
                    raise GameError("bad-structure", f"{nid} -> unknown child {child}")
                self.parents[child] = (nid, action)
                stack.append(child)
        if seen != set(self.nodes):
            raise GameError("bad-structure", f"unreachable nodes {set(self.nodes) - seen}")
        self._validate_info_sets()

    def _validate_node(self, node: Node) -> None:
        if node.is_terminal:
            if node.children or node.label is None or len(node.utilities) != 2:
                raise GameError("bad-structure", f"malformed terminal {node.node_id}")
        else:
            if not node.children:
                raise GameError("bad-structure", f"{node.node_id} has no actions")
            if node.player not in (1, 2):
                raise GameError("bad-structure", f"{node.node_id} has no player")
            if node.info_set not in self.info_sets:
                raise GameError("bad-structure", f"{node.node_id} in unknown info set")

    def _validate_info_sets(self) -> None:
        decision_nodes = {n.node_id for n in self.nodes.values() if not n.is_terminal}
        covered: set[str] = set()
        for iset in self.info_sets.values():
            for nid in iset.nodes:
                if nid in covered:
                    raise GameError("bad-structure", f"{nid} in two info sets")
                covered.add(nid)
                node = self.nodes.get(nid)
                if node is None or node.is_terminal:
                    raise GameError("bad-structure", f"info set holds non-decision node {nid}")
                if node.info_set != iset.set_id or node.player != iset.player:
                    raise GameError("bad-structure", f"{nid} mislabeled in {iset.set_id}")
                if node.actions != iset.actions:
                    raise GameError("bad-structure", f"{nid} action mismatch in {iset.set_id}")
            # perfect recall: the owner's own action history must be the same
            # at every node of the set (and so no node can precede another)
            histories = {self._own_history(nid, iset.player) for nid in iset.nodes}
            if len(histories) != 1:
                raise GameError("bad-structure", f"{iset.set_id} violates perfect recall")
        if covered != decision_nodes:
            raise GameError("bad-structure", f"info sets miss nodes {decision_nodes - covered}")

    def _own_history(self, nid: str, player: int) -> tuple[tuple[str, str], ...]:
        history = []
        while nid in self.parents:
            nid, action = self.parents[nid]
            node = self.nodes[nid]
            if node.player == player:
                history.append((node.info_set, action))
        return tuple(reversed(history))

    def terminals(self) -> list[Node]:
        return [n for n in self.nodes.values() if n.is_terminal]


# ---------------------------------------------------------------------------
# Payoff cells (exact totals per outcome, as enforced by the contracts)
# ---------------------------------------------------------------------------


def _plain_cell(p: Params, i: int, j: int) -> tuple[int, int]:
    w, c, d, z = p.w, p.c, p.d, p.z
    if i == 0 and j == 0:
        return (w - c, w - c)
    if i == 0:
        return (z, -d)
    if j == 0:
        return (-d, z)
    if i == 1 and j == 1:
        return (w, w)
    return (-d, -d)


def _coalition_cell(p: Params, i: int, j: int) -> tuple[int, int]:
    w, c, d, t, b, z = p.w, p.c, p.d, p.t, p.b, p.z
    return {
        (0, 0): (w - c, w - c), (0, 1): (z - t - b, -d + t + b), (0, 2): (z, -d),
        (1, 0): (-d + t, z - t), (1, 1): (w - b, w + b), (1, 2): (-d + t, -d - t),
        (2, 0): (-d, z), (2, 1): (-d - t - b, -d + t + b), (2, 2): (-d, -d),
    }[i, j]


def _report_cell(p: Params, rho: int, i: int, j: int) -> tuple[int, int]:
    if rho == 0:
        return _plain_cell(p, i, j)
    w, c, ch, d, z = p.w, p.c, p.ch, p.d, p.z
    if rho == 1:
        if i == 0:
            return [(w - c, w - c - ch), (z, -d + w - c), (z, -d + w - c)][j]
        return (-d, z)
    if i == 0:
        return [(w - c, w - c - ch), (z, -d), (z, -d)][j]
    return (-d, z) if j == 0 else (-d, -d)


def _coalition_report_cell(p: Params, rho: int, i: int, j: int) -> tuple[int, int]:
    if rho == 0:
        return _coalition_cell(p, i, j)
    w, c, ch, d, t, b, z = p.w, p.c, p.ch, p.d, p.t, p.b, p.z
    if rho == 1:
        return {
            (0, 0): (w - c, w - c - ch), (0, 1): (z - t - b, -d + w - c + t + b),
            (0, 2): (z, -d + w - c),
            (1, 0): (-d + t, z - t), (1, 1): (-d - b, z + b), (1, 2): (-d + t, z - t),
            (2, 0): (-d, z), (2, 1): (-d - t - b, z + t + b), (2, 2): (-d, z),
        }[i, j]
    return {
        (0, 0): (w - c, w - c - ch), (0, 1): (z - t - b, -d + t + b), (0, 2): (z, -d),
        (1, 0): (-d + t, z - t), (1, 1): (-d - b, -d + b), (1, 2): (-d + t, -d - t),
        (2, 0): (-d, z), (2, 1): (-d - t - b, -d + t + b), (2, 2): (-d, -d),
    }[i, j]


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------


def _terminal(nid: str, cell: tuple[int, int], label: str) -> Node:
    return Node(node_id=nid, utilities=(Fraction(cell[0]), Fraction(cell[1])), label=label)


def _decision(nid: str, player: int, set_id: str, children: dict[str, str]) -> Node:
    return Node(node_id=nid, player=player, info_set=set_id, children=children)


def _build_g1(p: Params) -> Game:
    nodes = {"v0": _decision("v0", 1, "I1", {a: f"v{1 + i}" for i, a in enumerate(_ACTS)})}
    for i in range(3):
        nodes[f"v{1 + i}"] = _decision(
            f"v{1 + i}", 2, "I2", {a: f"v{4 + 3 * i + j}" for j, a in enumerate(_ACTS)}
        )
        for j in range(3):
            n = 4 + 3 * i + j
            nodes[f"v{n}"] = _terminal(f"v{n}", _plain_cell(p, i, j), f"G1:v{n}")
    info_sets = {
        "I1": InfoSet("I1", 1, ("v0",), _ACTS),
        "I2": InfoSet("I2", 2, ("v1", "v2", "v3"), _ACTS),
    }
    return Game("g1", p, nodes, info_sets, player_roles={1: "C1", 2: "C2"})


def _build_g2(p: Params) -> Game:
    baseline = (p.w - p.c, p.w - p.c)  # both-honest play of the plain game
    nodes = {
        "v0": _decision("v0", 1, "I1.1", {"no_init": "u0", "init": "v1"}),
        "u0": _terminal("u0", baseline, "G1:v4"),
        "v1": _decision("v1", 2, "I2.1", {"no_collude": "u1", "collude": "v2"}),
        "u1": _terminal("u1", baseline, "G1:v4"),
        "v2": _decision("v2", 1, "I1.2", {a: f"v{3 + i}" for i, a in enumerate(_ACTS)}),
    }
    for i in range(3):
        nodes[f"v{3 + i}"] = _decision(
            f"v{3 + i}", 2, "I2.2", {a: f"v{6 + 3 * i + j}" for j, a in enumerate(_ACTS)}
        )
        for j in range(3):
            n = 6 + 3 * i + j
            nodes[f"v{n}"] = _terminal(f"v{n}", _coalition_cell(p, i, j), f"G2:v{n}")
    info_sets = {
        "I1.1": InfoSet("I1.1", 1, ("v0",), ("no_init", "init")),
        "I2.1": InfoSet("I2.1", 2, ("v1",), ("no_collude", "collude")),
        "I1.2": InfoSet("I1.2", 1, ("v2",), _ACTS),
        "I2.2": InfoSet("I2.2", 2, ("v3", "v4", "v5"), _ACTS),
    }
    return Game("g2", p, nodes, info_sets, player_roles={1: "LDR", 2: "FLR"})


_REPORT_ACTS = ("no_report", "report_correct", "report_wrong")


def _build_g3(p: Params) -> Game:
    nodes = {
        "v0": _decision("v0", 2, "I2.1", {a: f"v{1 + r}" for r, a in enumerate(_REPORT_ACTS)})
    }
    for rho in range(3):
        nodes[f"v{1 + rho}"] = _decision(
            f"v{1 + rho}", 1, "I1", {a: f"v{4 + 3 * rho + i}" for i, a in enumerate(_ACTS)}
        )
        for i in range(3):
            nid = f"v{4 + 3 * rho + i}"
            nodes[nid] = _decision(
                nid, 2, f"I2.{2 + rho}",
                {a: f"v{13 + 9 * rho + 3 * i + j}" for j, a in enumerate(_ACTS)},
            )
            for j in range(3):
                n = 13 + 9 * rho + 3 * i + j
                nodes[f"v{n}"] = _terminal(f"v{n}", _report_cell(p, rho, i, j), f"G3:v{n}")
    info_sets = {
        "I2.1": InfoSet("I2.1", 2, ("v0",), _REPORT_ACTS),
        "I1": InfoSet("I1", 1, ("v1", "v2", "v3"), _ACTS),
        "I2.2": InfoSet("I2.2", 2, ("v4", "v5", "v6"), _ACTS),
        "I2.3": InfoSet("I2.3", 2, ("v7", "v8", "v9"), _ACTS),
        "I2.4": InfoSet("I2.4", 2, ("v10", "v11", "v12"), _ACTS),
    }
    return Game("g3", p, nodes, info_sets, player_roles={1: "OTH", 2: "TRA"})


def _build_g4(p: Params) -> Game:
    baseline = (p.w - p.c, p.w - p.c)  # both-honest play of the reporting game
    nodes = {
        "v0": _decision("v0", 1, "I1.1", {"no_init": "u0", "init": "v1"}),
        "u0": _terminal("u0", baseline, "G3:v13"),
        "v1": _decision("v1", 2, "I2.1", {"no_collude": "u1", "collude": "v2"}),
        "u1": _terminal("u1", baseline, "G3:v13"),
        "v2": _decision("v2", 2, "I2.2", {a: f"v{3 + r}" for r, a in enumerate(_REPORT_ACTS)}),
    }
    for rho in range(3):
        nodes[f"v{3 + rho}"] = _decision(
            f"v{3 + rho}", 1, "I1.2", {a: f"v{6 + 3 * rho + i}" for i, a in enumerate(_ACTS)}
        )
        for i in range(3):
            nid = f"v{6 + 3 * rho + i}"
            nodes[nid] = _decision(
                nid, 2, f"I2.{3 + rho}",
                {a: f"v{15 + 9 * rho + 3 * i + j}" for j, a in enumerate(_ACTS)},
            )
            for j in range(3):
                n = 15 + 9 * rho + 3 * i + j
                nodes[f"v{n}"] = _terminal(
                    f"v{n}", _coalition_report_cell(p, rho, i, j), f"G4:v{n}"
                )
    info_sets = {
        "I1.1": InfoSet("I1.1", 1, ("v0",), ("no_init", "init")),
        "I2.1": InfoSet("I2.1", 2, ("v1",), ("no_collude", "collude")),
        "I2.2": InfoSet("I2.2", 2, ("v2",), _REPORT_ACTS),
        "I1.2": InfoSet("I1.2", 1, ("v3", "v4", "v5"), _ACTS),
        "I2.3": InfoSet("I2.3", 2, ("v6", "v7", "v8"), _ACTS),
        "I2.4": InfoSet("I2.4", 2, ("v9", "v10", "v11"), _ACTS),
        "I2.5": InfoSet("I2.5", 2, ("v12", "v13", "v14"), _ACTS),
    }
    return Game("g4", p, nodes, info_sets, player_roles={1: "LDR", 2: "FLR"})


_BUILDERS = {"g1": _build_g1, "g2": _build_g2, "g3": _build_g3, "g4": _build_g4}


def build_game(game_id: str, params: Params) -> Game:
    if game_id not in _BUILDERS:
        raise GameError("unknown-game", f"no game {game_id!r}")
    return _BUILDERS[game_id](params)


# ---------------------------------------------------------------------------
# Assessments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Assessment:
    """A behavior-strategy profile plus a belief system, both per info set."""

    profile: Mapping[str, Mapping[str, Fraction]]
    beliefs: Mapping[str, Mapping[str, Fraction]]


def validate_assessment(game: Game, assessment: Assessment) -> None:
    for iset in game.info_sets.values():
        dist = assessment.profile.get(iset.set_id)
        if dist is None or set(dist) - set(iset.actions):
            raise GameError("bad-assessment", f"profile malformed at {iset.set_id}")
        if any(pr < 0 for pr in dist.values()) or sum(dist.values()) != 1:
            raise GameError("bad-assessment", f"profile not a distribution at {iset.set_id}")
        beliefs = assessment.beliefs.get(iset.set_id)
        if beliefs is None or set(beliefs) - set(iset.nodes):
            raise GameError("bad-assessment", f"beliefs malformed at {iset.set_id}")
        if any(pr < 0 for pr in beliefs.values()) or sum(beliefs.values()) != 1:
            raise GameError("bad-assessment", f"beliefs not a distribution at {iset.set_id}")


def _pure(action: str, actions: tuple[str, ...]) -> dict[str, Fraction]:
    return {a: Fraction(1 if a == action else 0) for a in actions}


def reference_equilibrium(game: Game) -> Assessment:
    """The candidate sequential equilibrium for each game family:

    g1 -- both clouds deliver the true result.
    g2 -- the ringleader initiates, the follower colludes, both deliver the
          agreed wrong result.
    g3 -- nobody reports, both deliver the true result (and would do so after
          any report).
    g4 -- the ringleader does not initiate; the follower would collude,
          report correctly, and deliver the agreed wrong result throughout.
    """
    gid = game.game_id
    if gid == "g1":
        profile = {"I1": _pure("fx", _ACTS), "I2": _pure("fx", _ACTS)}
        beliefs = {"I1": {"v0": Fraction(1)},
                   "I2": {"v1": Fraction(1), "v2": Fraction(0), "v3": Fraction(0)}}
    elif gid == "g2":
        profile = {
            "I1.1": _pure("init", ("no_init", "init")),
            "I2.1": _pure("collude", ("no_collude", "collude")),
            "I1.2": _pure("r", _ACTS),
            "I2.2": _pure("r", _ACTS),
        }
        beliefs = {
            "I1.1": {"v0": Fraction(1)},
            "I2.1": {"v1": Fraction(1)},
            "I1.2": {"v2": Fraction(1)},
            "I2.2": {"v3": Fraction(0), "v4": Fraction(1), "v5": Fraction(0)},
        }
    elif gid == "g3":
        profile = {
            "I2.1": _pure("no_report", _REPORT_ACTS),
            "I1": _pure("fx", _ACTS),
            "I2.2": _pure("fx", _ACTS),
            "I2.3": _pure("fx", _ACTS),
            "I2.4": _pure("fx", _ACTS),
        }
        beliefs = {
            "I2.1": {"v0": Fraction(1)},
            "I1": {"v1": Fraction(1), "v2": Fraction(0), "v3": Fraction(0)},
            "I2.2": {"v4": Fraction(1), "v5": Fraction(0), "v6": Fraction(0)},
            "I2.3": {"v7": Fraction(1), "v8": Fraction(0), "v9": Fraction(0)},
            "I2.4": {"v10": Fraction(1), "v11": Fraction(0), "v12": Fraction(0)},
        }
    elif gid == "g4":
        profile = {
            "I1.1": _pure("no_init", ("no_init", "init")),
            "I2.1": _pure("collude", ("no_collude", "collude")),
            "I2.2": _pure("report_correct", _REPORT_ACTS),
            "I1.2": _pure("r", _ACTS),
            "I2.3": _pure("r", _ACTS),
            "I2.4": _pure("r", _ACTS),
            "I2.5": _pure("r", _ACTS),
        }
        beliefs = {
            "I1.1": {"v0": Fraction(1)},
            "I2.1": {"v1": Fraction(1)},
            "I2.2": {"v2": Fraction(1)},
            "I1.2": {"v3": Fraction(0), "v4": Fraction(1), "v5": Fraction(0)},
            "I2.3": {"v6": Fraction(0), "v7": Fraction(1), "v8": Fraction(0)},
            "I2.4": {"v9": Fraction(0), "v10": Fraction(1), "v11": Fraction(0)},
            "I2.5": {"v12": Fraction(0), "v13": Fraction(1), "v14": Fraction(0)},
        }
    else:  # pragma: no cover - build_game already rejects unknown ids
        raise GameError("unknown-game", gid)
    assessment = Assessment(profile=profile, beliefs=beliefs)
    validate_assessment(game, assessment)
    return assessment


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def node_value(game: Game, node_id: str, profile: Mapping, player: int) -> Fraction:
    """Expected payoff for ``player`` when play starts at ``node_id`` and
    everyone follows ``profile``."""
    node = game.nodes[node_id]
    if node.is_terminal:
        return node.utilities[player - 1]
    dist = profile[node.info_set]
    return sum(
        (pr * node_value(game, node.children[a], profile, player)
         for a, pr in dist.items() if pr),
        Fraction(0),
    )


def expected_payoff(game: Game, assessment: Assessment, set_id: str) -> Fraction:
    """Belief-weighted expected payoff of the info set's owner."""
    iset = game.info_sets[set_id]
    beliefs = assessment.beliefs[set_id]
    return sum(
        (beliefs.get(h, Fraction(0)) * node_value(game, h, assessment.profile, iset.player)
         for h in iset.nodes),
        Fraction(0),
    )


def outcome_distribution(game: Game, profile: Mapping) -> dict[str, Fraction]:
    """Probability of each terminal node when play starts at the root."""
    dist: dict[str, Fraction] = {}
    stack: list[tuple[str, Fraction]] = [(game.root, Fraction(1))]
    while stack:
        nid, pr = stack.pop()
        node = game.nodes[nid]
        if node.is_terminal:
            dist[nid] = dist.get(nid, Fraction(0)) + pr
            continue
        for action, child in node.children.items():
            p_a = profile[node.info_set].get(action, Fraction(0))
            if p_a:
                stack.append((child, pr * p_a))
    return dist


def play(game: Game, profile: Mapping) -> dict[str, Fraction]:
    """Distribution over terminal labels when everyone follows ``profile``."""
    labels: dict[str, Fraction] = {}
    for nid, pr in outcome_distribution(game, profile).items():
        label = game.nodes[nid].label
        labels[label] = labels.get(label, Fraction(0)) + pr
    return labels


# ---------------------------------------------------------------------------
# Sequential rationality
# ---------------------------------------------------------------------------

# nodes where several actions are exactly payoff-equal by construction, so
# only weak optimality can hold there (the stated beliefs put zero weight on
# these nodes)
_NODE_TIE_EXEMPT: dict[str, frozenset[tuple[str, str]]] = {
    "g3": frozenset({("v8", "r"), ("v8", "other"), ("v9", "r"), ("v9", "other")}),
}


@dataclass(frozen=True)
class NodeCheck:
    node_id: str
    action: str
    value: Fraction
    eq_value: Fraction
    relation: str  # "worse" | "tie-exempt" | "tie" | "better"


@dataclass(frozen=True)
class InfoSetCheck:
    set_id: str
    player: int
    eq_value: Fraction
    one_shot_values: Mapping[str, Fraction]
    full_deviation_max_gain: Fraction
    weak_ok: bool
    strict_ok: bool
    nodes_ok: bool
    node_checks: tuple[NodeCheck, ...]


@dataclass(frozen=True)
class RationalityReport:
    game_id: str
    weak_ok: bool
    strict_ok: bool
    nodes_ok: bool
    checks: tuple[InfoSetCheck, ...]

    @property
    def ok(self) -> bool:
        return self.weak_ok and self.strict_ok and self.nodes_ok


def _own_info_sets(game: Game, player: int) -> list[InfoSet]:
    return [iset for iset in game.info_sets.values() if iset.player == player]


def check_sequential_rationality(game: Game, assessment: Assessment) -> RationalityReport:
    """Check the assessment at every information set.

    * weak: no alternative full strategy of the owner gains anything under
      the stated beliefs (max gain <= 0);
    * strict: every one-shot deviation at the set itself does strictly worse;
    * nodes: at every single node of the set the prescribed action strictly
      beats each alternative, except at declared payoff-tie nodes, where
      exact equality is asserted instead.
    """
    validate_assessment(game, assessment)
    exempt = _NODE_TIE_EXEMPT.get(game.game_id, frozenset())
    checks = []
    for set_id in sorted(game.info_sets):
        iset = game.info_sets[set_id]
        player = iset.player
        beliefs = assessment.beliefs[set_id]
        eq_value = expected_payoff(game, assessment, set_id)
        support = {a for a, pr in assessment.profile[set_id].items() if pr}

        # one-shot deviations at this set
        one_shot: dict[str, Fraction] = {}
        for action in iset.actions:
            modified = dict(assessment.profile)
            modified[set_id] = _pure(action, iset.actions)
            one_shot[action] = sum(
                (beliefs.get(h, Fraction(0)) * node_value(game, h, modified, player)
                 for h in iset.nodes),
                Fraction(0),
            )
        strict_ok = all(
            one_shot[a] < eq_value for a in iset.actions if a not in support
        )

        # full deviations: any combination of actions at the owner's sets
        own_sets = _own_info_sets(game, player)
        max_gain = Fraction(0) - Fraction(1)  # start below any possible gain
        for combo in itertools.product(*(s.actions for s in own_sets)):
            modified = dict(assessment.profile)
            for s, action in zip(own_sets, combo):
                modified[s.set_id] = _pure(action, s.actions)
            value = sum(
                (beliefs.get(h, Fraction(0)) * node_value(game, h, modified, player)
                 for h in iset.nodes),
                Fraction(0),
            )
            max_gain = max(max_gain, value - eq_value)
        weak_ok = max_gain <= 0

        # per-node dominance of the prescribed action
        node_checks = []
        nodes_ok = True
        for h in iset.nodes:
            eq_h = node_value(game, h, assessment.profile, player)
            for action in iset.actions:
                if action in support:
                    continue
                modified = dict(assessment.profile)
                modified[set_id] = _pure(action, iset.actions)
                value = node_value(game, h, modified, player)
                if (h, action) in exempt:
                    relation = "tie-exempt"
                    if value != eq_h:
                        relation = "worse" if value < eq_h else "better"
                        nodes_ok = False  # the declared tie must really be a tie
                elif value < eq_h:
                    relation = "worse"
                elif value == eq_h:
                    relation, nodes_ok = "tie", False
                else:
                    relation, nodes_ok = "better", False
                node_checks.append(NodeCheck(h, action, value, eq_h, relation))

        checks.append(InfoSetCheck(
            set_id=set_id, player=player, eq_value=eq_value,
            one_shot_values=one_shot, full_deviation_max_gain=max_gain,
            weak_ok=weak_ok, strict_ok=strict_ok, nodes_ok=nodes_ok,
            node_checks=tuple(node_checks),
        ))
    return RationalityReport(
        game_id=game.game_id,
        weak_ok=all(c.weak_ok for c in checks),
        strict_ok=all(c.strict_ok for c in checks),
        nodes_ok=all(c.nodes_ok for c in checks),
        checks=tuple(checks),
    )


# ---------------------------------------------------------------------------
# Consistency
# ---------------------------------------------------------------------------


def bayes_beliefs(game: Game, profile: Mapping) -> dict[str, dict[str, Fraction]]:
    """Beliefs induced by Bayes' rule from node reach probabilities."""
    reach: dict[str, Fraction] = {game.root: Fraction(1)}
    stack = [game.root]
    while stack:
        nid = stack.pop()
        node = game.nodes[nid]
        if node.is_terminal:
            continue
        for action, child in node.children.items():
            reach[child] = reach[nid] * profile[node.info_set].get(action, Fraction(0))
            stack.append(child)
    beliefs: dict[str, dict[str, Fraction]] = {}
    for iset in game.info_sets.values():
        total = sum((reach[h] for h in iset.nodes), Fraction(0))
        if total == 0:
            raise GameError("unreachable-info-set", iset.set_id)
        beliefs[iset.set_id] = {h: reach[h] / total for h in iset.nodes}
    return beliefs


def consistency_sequence(game: Game, assessment: Assessment, k: int) -> Assessment:
    """The canonical fully-mixed approximation: at every info set the
    prescribed action keeps weight 1 - (n-1)/k and every other action gets
    1/k; beliefs follow by exact Bayes' rule."""
    if k < 3:
        raise GameError("bad-k", "need k >= 3")
    profile: dict[str, dict[str, Fraction]] = {}
    for iset in game.info_sets.values():
        dist = assessment.profile[iset.set_id]
        star = max(dist, key=dist.get)
        n = len(iset.actions)
        profile[iset.set_id] = {
            a: (1 - Fraction(n - 1, k)) if a == star else Fraction(1, k)
            for a in iset.actions
        }
    return Assessment(profile=profile, beliefs=bayes_beliefs(game, profile))


def assessment_distance(game: Game, a: Assessment, b: Assessment) -> Fraction:
    """Sup-norm distance across all strategy and belief entries."""
    gap = Fraction(0)
    for iset in game.info_sets.values():
        for key in iset.actions:
            gap = max(gap, abs(
                a.profile[iset.set_id].get(key, Fraction(0))
                - b.profile[iset.set_id].get(key, Fraction(0))
            ))
        for key in iset.nodes:
            gap = max(gap, abs(
                a.beliefs[iset.set_id].get(key, Fraction(0))
                - b.beliefs[iset.set_id].get(key, Fraction(0))
            ))
    return gap


def check_consistency(
    game: Game, assessment: Assessment, ks: tuple[int, ...] = (10, 100, 1000, 10**7)
) -> dict[int, Fraction]:
    """Residual sup-distance between the k-th fully-mixed approximation and
    the assessment, per k.  For the reference equilibria this is exactly
    2/k, witnessing consistency in the limit."""
    return {
        k: assessment_distance(game, consistency_sequence(game, assessment, k), assessment)
        for k in ks
    }


# ---------------------------------------------------------------------------
# Reference analysis (game + equilibrium + both checks)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AnalysisReport:
    game_id: str
    params_violations: tuple[str, ...]
    rationality: RationalityReport
    residuals: Mapping[int, Fraction]
    outcome: Mapping[str, Fraction]
    notes: tuple[str, ...]

    @property
    def consistency_ok(self) -> bool:
        return all(residual * k <= 2 for k, residual in self.residuals.items())

    @property
    def equilibrium_ok(self) -> bool:
        return self.rationality.ok and self.consistency_ok

    @property
    def ok(self) -> bool:
        return not self.params_violations and self.equilibrium_ok


def analyze_reference(
    game_id: str, params: Params, ks: tuple[int, ...] = (10, 100, 1000, 10**7)
) -> AnalysisReport:
    """Build the game, its reference equilibrium, and run both equilibrium
    checks plus parameter validation."""
    game = build_game(game_id, params)
    assessment = reference_equilibrium(game)
    rationality = check_sequential_rationality(game, assessment)
    residuals = check_consistency(game, assessment, ks)
    notes = []
    if game_id == "g4":
        bound = params.z + params.d
        status = "satisfied" if params.t > bound else "NOT satisfied"
        notes.append(
            "g4-followup-deposit: the stated post-report strategies are "
            f"sequentially rational only if t > z + d; here t={params.t}, "
            f"z + d = {bound} ({status})"
        )
    return AnalysisReport(
        game_id=game_id,
        params_violations=tuple(validate_params(params)),
        rationality=rationality,
        residuals=residuals,
        outcome=play(game, assessment.profile),
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# Protocol crosscheck
# ---------------------------------------------------------------------------


def _scenario_grid(game_id: str):
    """Yield ``(terminal node id, strat1, strat2, traitor_enabled)`` covering
    every terminal of the game with a concrete protocol scenario."""
    from .protocol import CloudStrategy, CtpAction, ReportChoice, Role

    acts = (CtpAction.FX, CtpAction.R, CtpAction.OTHER)
    reports = (ReportChoice.NO_REPORT, ReportChoice.REPORT_CORRECT, ReportChoice.REPORT_WRONG)

    def S(role=Role.HONEST, report=ReportChoice.NO_REPORT, action=CtpAction.FX):
        return CloudStrategy(coalition_role=role, report_choice=report, ctp_action=action)

    if game_id == "g1":
        for i in range(3):
            for j in range(3):
                yield f"v{4 + 3 * i + j}", S(action=acts[i]), S(action=acts[j]), False
    elif game_id == "g2":
        yield "u0", S(), S(), False
        yield "u1", S(role=Role.INITIATE), S(role=Role.REJECT), False
        for i in range(3):
            for j in range(3):
                yield (f"v{6 + 3 * i + j}",
                       S(role=Role.INITIATE, action=acts[i]),
                       S(role=Role.ACCEPT, action=acts[j]), False)
    elif game_id == "g3":
        for rho in range(3):
            for i in range(3):
                for j in range(3):
                    yield (f"v{13 + 9 * rho + 3 * i + j}",
                           S(action=acts[i]),
                           S(report=reports[rho], action=acts[j]), True)
    elif game_id == "g4":
        yield "u0", S(), S(), True
        yield "u1", S(role=Role.INITIATE), S(role=Role.REJECT), True
        for rho in range(3):
            for i in range(3):
                for j in range(3):
                    yield (f"v{15 + 9 * rho + 3 * i + j}",
                           S(role=Role.INITIATE, action=acts[i]),
                           S(role=Role.ACCEPT, report=reports[rho], action=acts[j]), True)
    else:
        raise GameError("unknown-game", game_id)


def payoff_crosscheck(
    game_id: str, params: Params, group: str = "toy", seed: int = 7
) -> tuple[int, list[dict]]:
    """Replay every terminal of the game tree as a full contract scenario and
    compare terminal labels and exact money deltas against the tree.

    Returns ``(cells checked, mismatches)``; an empty mismatch list means the
    game tree and the executable protocol agree everywhere.
    """
    from .protocol import Task, run_scenario

    game = build_game(game_id, params)
    task = Task()
    mismatches: list[dict] = []
    cells = 0
    for nid, s1, s2, traitor_enabled in _scenario_grid(game_id):
        node = game.nodes[nid]
        out = run_scenario(
            params, task, s1, s2, seed=seed, group=group, traitor_enabled=traitor_enabled
        )
        cells += 1
        expected = (int(node.utilities[0]), int(node.utilities[1]))
        actual = (out.deltas["cloud1"], out.deltas["cloud2"])
        if out.terminal_label != node.label or actual != expected:
            mismatches.append({
                "node": nid,
                "expected_label": node.label,
                "actual_label": out.terminal_label,
                "expected_deltas": expected,
                "actual_deltas": actual,
            })
    return cells, mismatches
