"""Prefix tree over every generation attempt.

Each node is one generated token. The active path (root to ``current``) is the
live candidate program; paths abandoned by a rollback stay in the tree with
``error_flag`` set so that revisiting them re-applies and accumulates
penalties. The last active path is the final program.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional

from .errors import EngineError

PENALTY_FLOOR = 1e-12


@dataclass(frozen=True)
class RollbackPoint:
    """A (line, column) target in the decoded active-path text.

    ``lineno`` is 1-based, ``offset`` is a 0-based column within that line.
    """

    lineno: int
    offset: int

    def __post_init__(self):
        if self.lineno < 1:
            raise ValueError(f"lineno must be >= 1, got {self.lineno}")
        if self.offset < 0:
            raise ValueError(f"offset must be >= 0, got {self.offset}")


class TokenNode:
    """One generated token. ``penalty`` only ever decreases."""

    __slots__ = (
        "token_id",
        "token_text",
        "step_index",
        "entropy",
        "penalty",
        "error_flag",
        "parent",
        "children",
    )

    def __init__(self, token_id, token_text: str, step_index: int,
                 entropy: float, parent: Optional["TokenNode"]):
        self.token_id = token_id
        self.token_text = token_text
        self.step_index = step_index
        self.entropy = entropy
        self.penalty = 1.0
        self.error_flag = False
        self.parent = parent
        self.children: Dict[int, TokenNode] = {}

    def __repr__(self):
        return (f"TokenNode({self.token_id!r}, {self.token_text!r}, "
                f"step={self.step_index}, pen={self.penalty:.4g})")


class GenerationTree:
    """Trie of all generated tokens plus bookkeeping for the active path.

    ``total_tokens_emitted`` counts every append, including re-walks over
    shared prefixes after a rollback, so it is the budget meter.
    ``rollback_log`` records the abandoned suffix of each effective rollback;
    its length is the rollback count and it doubles as an audit trail.
    """

    def __init__(self):
        self.root = TokenNode(None, "", -1, 0.0, None)
        self.current = self.root
        self.stmt_boundaries: List[TokenNode] = []
        self.reports: list = []  # ErrorReport history, append-only
        self.total_tokens_emitted = 0
        self.rollback_log: List[List[TokenNode]] = []
        self._last_abandoned: List[TokenNode] = []

    # -- path helpers ---------------------------------------------------

    def path_nodes(self) -> List[TokenNode]:
        """Generated nodes on the active path, root excluded, in step order."""
        nodes: List[TokenNode] = []
        node = self.current
        while node is not self.root:
            nodes.append(node)
            node = node.parent
        nodes.reverse()
        return nodes

    def decoded_text(self, node: Optional[TokenNode] = None) -> str:
        """Concatenated token text from the root to ``node`` (default: current)."""
        if node is None:
            node = self.current
        parts: List[str] = []
        while node is not self.root:
            parts.append(node.token_text)
            node = node.parent
        return "".join(reversed(parts))

    def final_code(self) -> str:
        """Decoded text of the active path; the prompt is never in the tree."""
        return self.decoded_text()

    # -- construction ---------------------------------------------------

    def append_token(self, token_id, token_text: str, entropy: float) -> TokenNode:
        """Advance the head by one token, reusing an existing child when the
        same token is re-picked after a rollback (its penalty is preserved)."""
        child = self.current.children.get(token_id)
        if child is None:
            child = TokenNode(token_id, token_text, self.current.step_index + 1,
                              entropy, self.current)
            self.current.children[token_id] = child
        else:
            child.entropy = entropy
        self.total_tokens_emitted += 1
        self.current = child
        return child

    def mark_statement(self):
        if self.current is self.root:
            raise EngineError("cannot mark a statement boundary at the root")
        if self.current in self.stmt_boundaries:
            raise EngineError("current node is already a statement boundary")
        self.stmt_boundaries.append(self.current)

    # -- text coordinates -----------------------------------------------

    def _char_position(self, lineno: int, offset: int) -> int:
        """Absolute character index of (lineno, offset) in the active text.

        ``offset`` may run past the end of its line (the excess spills into
        following lines); the result must land within the text.
        """
        text = self.decoded_text()
        lines = text.split("\n")
        if lineno > len(lines):
            raise EngineError(
                f"rollback point line {lineno} beyond text ({len(lines)} lines)")
        start = sum(len(line) + 1 for line in lines[:lineno - 1])
        pos = start + offset
        if pos > len(text):
            raise EngineError(
                f"rollback point ({lineno},{offset}) beyond end of text")
        return pos

    def _node_ending_at_or_before(self, pos: int) -> TokenNode:
        """Deepest active-path node whose cumulative text ends at or before
        character ``pos``; the root (length 0) is the floor."""
        best = self.root
        cum = 0
        for node in self.path_nodes():
            cum += len(node.token_text)
            if cum <= pos:
                best = node
            else:
                break
        return best

    def locate(self, lineno: int, offset: int) -> TokenNode:
        """Inverse of the text mapping: the node a rollback to (lineno, offset)
        would resolve to."""
        return self._node_ending_at_or_before(self._char_position(lineno, offset))

    def token_index_to_lineno(self, t: int) -> int:
        """1 + number of newlines strictly before the start of token ``t``."""
        path = self.path_nodes()
        if t < 0 or t >= len(path):
            raise EngineError(f"token index {t} out of range (path length {len(path)})")
        start = sum(len(n.token_text) for n in path[:t])
        return 1 + self.decoded_text().count("\n", 0, start)

    # -- rollback and penalties ------------------------------------------

    def rollback_to(self, point: RollbackPoint) -> TokenNode:
        """Truncate the active path to the token boundary at or before the
        requested point. Abandoned nodes are flagged and retained."""
        node = self._node_ending_at_or_before(
            self._char_position(point.lineno, point.offset))
        return self.rollback_to_node(node)

    def rollback_to_node(self, node: TokenNode) -> TokenNode:
        path = self.path_nodes()
        if node is not self.root and node not in path:
            raise EngineError("rollback target is not on the active path")
        cut = 0 if node is self.root else path.index(node) + 1
        abandoned = path[cut:]
        for n in abandoned:
            n.error_flag = True
        self.current = node
        self.stmt_boundaries = [b for b in self.stmt_boundaries
                                if b.step_index <= node.step_index]
        self._last_abandoned = abandoned
        if abandoned:
            self.rollback_log.append(abandoned)
        return node

    def apply_penalties(self, r_node: TokenNode, decay: float,
                        exponent_offset: int = 0):
        """Multiply exponentially decaying penalties onto the just-abandoned
        path. The node immediately after ``r_node`` is step zero of the decay,
        so it receives factor ``decay ** exponent_offset`` (1 by default).
        Repeated rollbacks over the same nodes accumulate multiplicatively.
        """
        if not 0.0 < decay < 1.0:
            raise ValueError(f"decay factor must lie in (0, 1), got {decay}")
        base = r_node.step_index + 1
        for node in self._last_abandoned:
            exponent = node.step_index - base + exponent_offset
            if exponent < 0:
                exponent = 0
            node.penalty = max(PENALTY_FLOOR, node.penalty * decay ** exponent)

    def child_penalty_vector(self, node: TokenNode) -> Dict[int, float]:
        """Penalties of existing children; absent token ids implicitly carry 1."""
        return {tid: child.penalty for tid, child in node.children.items()}

    @property
    def rollback_count(self) -> int:
        return len(self.rollback_log)

    # -- debug dump -------------------------------------------------------

    def dump(self) -> str:
        """Line-oriented dump for golden-file tests: one node per line,
        indented by depth, ``token_text | step | penalty | flags``."""
        lines: List[str] = []

        def visit(node: TokenNode, depth: int):
            flags = "E" if node.error_flag else "-"
            if node in self.stmt_boundaries:
                flags += "B"
            if node is self.current:
                flags += "*"
            lines.append(f"{'  ' * depth}{node.token_text!r} | {node.step_index}"
                         f" | {node.penalty:.6g} | {flags}")
            for child in node.children.values():
                visit(child, depth + 1)

        visit(self.root, 0)
        return "\n".join(lines) + "\n"
