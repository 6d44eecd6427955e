import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from backgen.errors import EngineError
from backgen.trie import PENALTY_FLOOR, GenerationTree, RollbackPoint


def build(tree, *tokens, entropy=0.0):
    nodes = []
    for tid, text in tokens:
        nodes.append(tree.append_token(tid, text, entropy))
    return nodes


def test_first_token():
    tree = GenerationTree()
    node = tree.append_token(1, "def", 0.2)
    assert node.step_index == 0
    assert node.token_text == "def"
    assert tree.current is node
    assert tree.total_tokens_emitted == 1


def test_reappend_reuses_node_and_keeps_penalty():
    tree = GenerationTree()
    build(tree, (1, "a"), (2, "b\n"))
    victim = tree.current
    victim.penalty = 0.5
    tree.rollback_to_node(tree.root)
    tree.append_token(1, "a", 0.0)
    again = tree.append_token(2, "b\n", 0.0)
    assert again is victim
    assert again.penalty == 0.5


def test_emitted_counts_rolled_back_tokens():
    # 3 appends, roll back 1 token, 2 more appends: 5 emitted, path of 4.
    tree = GenerationTree()
    build(tree, (1, "a"), (2, "b"), (3, "c\n"))
    tree.rollback_to_node(tree.current.parent)
    build(tree, (4, "d"), (5, "e\n"))
    assert tree.total_tokens_emitted == 5
    assert len(tree.path_nodes()) == 4


def test_step_index_parent_child_relation():
    tree = GenerationTree()
    build(tree, (1, "a"), (2, "b"), (3, "c"))
    for node in tree.path_nodes():
        assert node.step_index == node.parent.step_index + 1
    assert tree.root.step_index == -1
    assert tree.root.token_text == ""


def test_mark_statement():
    tree = GenerationTree()
    build(tree, (1, "x"), (2, " = "), (3, "1\n"))
    tree.mark_statement()
    assert tree.stmt_boundaries == [tree.current]
    with pytest.raises(EngineError):
        tree.mark_statement()
    build(tree, (4, "y = 2\n"))
    tree.mark_statement()
    steps = [b.step_index for b in tree.stmt_boundaries]
    assert steps == sorted(steps) and len(set(steps)) == 2


def test_rollback_to_start_of_text_reaches_root():
    tree = GenerationTree()
    build(tree, (1, "a = 1\n"), (2, "b = 2\n"))
    node = tree.rollback_to(RollbackPoint(1, 0))
    assert node is tree.root
    assert tree.current is tree.root
    assert all(n.error_flag for n in tree.root.children.values())


def test_rollback_resolves_token_boundary_before_offset():
    tree = GenerationTree()
    n = build(tree, (1, "a = 1\n"), (2, "b = "), (3, "x\n"))
    # Column 4 of line 2 falls inside "x\n"; snap back to the end of "b = ".
    node = tree.rollback_to(RollbackPoint(2, 4))
    assert node is n[1]
    assert n[2].error_flag and not n[1].error_flag


def test_rollback_is_idempotent():
    tree = GenerationTree()
    build(tree, (1, "a = 1\n"), (2, "b = 2\n"))
    tree.rollback_to(RollbackPoint(2, 0))
    flagged_before = sum(1 for c in tree.root.children.values() if c.error_flag)
    count_before = tree.rollback_count
    tree.rollback_to(RollbackPoint(2, 0))
    flagged_after = sum(1 for c in tree.root.children.values() if c.error_flag)
    assert (flagged_before, count_before) == (flagged_after, tree.rollback_count)


def test_rollback_beyond_text_is_an_error():
    tree = GenerationTree()
    build(tree, (1, "a = 1\n"))
    with pytest.raises(EngineError):
        tree.rollback_to(RollbackPoint(5, 0))
    with pytest.raises(EngineError):
        tree.rollback_to(RollbackPoint(1, 99))


def test_rollback_removes_later_boundaries():
    tree = GenerationTree()
    build(tree, (1, "a = 1\n"))
    tree.mark_statement()
    first = tree.current
    build(tree, (2, "b = 2\n"))
    tree.mark_statement()
    tree.rollback_to(RollbackPoint(2, 0))
    assert tree.stmt_boundaries == [first]


def test_apply_penalties_decay_schedule():
    tree = GenerationTree()
    nodes = build(tree, (1, "a"), (2, "b"), (3, "c"), (4, "d\n"))
    r_node = nodes[0]
    tree.rollback_to_node(r_node)
    tree.apply_penalties(r_node, 0.9)
    # First regenerated position decays with exponent zero.
    assert nodes[1].penalty == pytest.approx(1.0)
    assert nodes[2].penalty == pytest.approx(0.9)
    assert nodes[3].penalty == pytest.approx(0.9 ** 2)


def test_apply_penalties_three_steps_past_point():
    tree = GenerationTree()
    nodes = build(tree, (1, "a"), (2, "b"), (3, "c"), (4, "d"), (5, "e\n"))
    tree.rollback_to_node(nodes[0])
    tree.apply_penalties(nodes[0], 0.9)
    assert nodes[4].penalty == pytest.approx(0.9 ** 3)  # 0.729


def test_penalties_accumulate_multiplicatively():
    tree = GenerationTree()
    nodes = build(tree, (1, "a"), (2, "b"), (3, "c"), (4, "d"), (5, "e\n"))
    for _ in range(2):
        tree.rollback_to_node(nodes[0])
        tree.apply_penalties(nodes[0], 0.9)
        for node in nodes[1:]:
            tree.append_token(node.token_id, node.token_text, 0.0)
    assert nodes[4].penalty == pytest.approx(0.729 ** 2)  # ~0.531441


def test_penalty_floor():
    tree = GenerationTree()
    nodes = build(tree, (1, "a"), (2, "b\n"))
    for _ in range(300):
        tree.rollback_to_node(nodes[0])
        tree.apply_penalties(nodes[0], 0.5, exponent_offset=1)
        tree.append_token(2, "b\n", 0.0)
    assert nodes[1].penalty == PENALTY_FLOOR


def test_exponent_offset_shifts_decay():
    tree = GenerationTree()
    nodes = build(tree, (1, "a"), (2, "b"), (3, "c\n"))
    tree.rollback_to_node(nodes[0])
    tree.apply_penalties(nodes[0], 0.9, exponent_offset=1)
    assert nodes[1].penalty == pytest.approx(0.9)
    assert nodes[2].penalty == pytest.approx(0.81)


def test_invalid_decay_rejected():
    tree = GenerationTree()
    nodes = build(tree, (1, "a"), (2, "b\n"))
    tree.rollback_to_node(nodes[0])
    for bad in (0.0, 1.0, -0.5, 1.5):
        with pytest.raises(ValueError):
            tree.apply_penalties(nodes[0], bad)


def test_child_penalty_vector():
    tree = GenerationTree()
    assert tree.child_penalty_vector(tree.root) == {}
    nodes = build(tree, (1, "a"), (2, "b"), (3, "c"), (4, "d\n"))
    tree.rollback_to_node(nodes[0])
    tree.apply_penalties(nodes[0], 0.9)
    tree.append_token(2, "b", 0.0)          # reuse
    tree.append_token(9, "alt\n", 0.0)      # clean sibling of "c"
    pens = tree.child_penalty_vector(nodes[1])
    assert pens[3] == pytest.approx(0.9)
    assert pens[9] == 1.0


def test_decoded_text_and_lineno():
    tree = GenerationTree()
    build(tree, (1, "a"), (2, " ="), (3, " 1"))
    assert tree.decoded_text() == "a = 1"
    assert tree.token_index_to_lineno(2) == 1

    tree = GenerationTree()
    build(tree, (1, "x=1\n"), (2, "y"), (3, "=2"))
    assert tree.token_index_to_lineno(1) == 2
    assert tree.token_index_to_lineno(0) == 1
    with pytest.raises(EngineError):
        tree.token_index_to_lineno(3)


def test_locate_endpoint_is_current():
    tree = GenerationTree()
    build(tree, (1, "a = 1\n"), (2, "b = 2"))
    text = tree.decoded_text()
    lines = text.split("\n")
    assert tree.locate(len(lines), len(lines[-1])) is tree.current


def test_final_code_is_active_path():
    tree = GenerationTree()
    build(tree, (1, "a = 1\n"), (2, "bad\n"))
    tree.rollback_to(RollbackPoint(2, 0))
    tree.append_token(3, "good\n", 0.0)
    assert tree.final_code() == "a = 1\ngood\n"


def test_dump_golden(tmp_path):
    tree = GenerationTree()
    nodes = build(tree, (1, "a = 1\n"), (2, "bad"), (3, "!\n"))
    tree.rollback_to(RollbackPoint(2, 0))
    tree.apply_penalties(nodes[0], 0.9)
    tree.append_token(4, "ok\n", 0.0)
    tree.mark_statement()
    with open("tests/fixtures/golden_trie.txt", encoding="utf-8") as fh:
        assert tree.dump() == fh.read()


# -- randomized structural properties ---------------------------------------

TOKENS = [(1, "a"), (2, " = "), (3, "1\n"), (4, "b"), (5, "2\n"),
          (6, "x + y\n"), (7, "("), (8, ")\n"), (9, "z")]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(min_value=0, max_value=99), min_size=1, max_size=60),
       st.randoms(use_true_random=False))
def test_random_op_sequences_uphold_invariants(ops, rnd):
    tree = GenerationTree()
    appends = 0
    last_target = None
    seen_penalty = {}
    for op in ops:
        if op < 55 or tree.current is tree.root:
            tid, text = TOKENS[op % len(TOKENS)]
            tree.append_token(tid, text, rnd.random())
            appends += 1
        elif op < 70:
            try:
                tree.mark_statement()
            except EngineError:
                pass
        elif op < 90:
            text = tree.decoded_text()
            pos = rnd.randint(0, len(text))
            head = text[:pos].split("\n")
            last_target = tree.rollback_to(RollbackPoint(len(head), len(head[-1])))
        elif last_target is not None:
            tree.apply_penalties(last_target, 0.9)
        # penalties never increase, for any node ever seen
        stack = [tree.root]
        while stack:
            node = stack.pop()
            prior = seen_penalty.get(id(node), 1.0)
            assert node.penalty <= prior + 1e-15
            assert 0.0 < node.penalty <= 1.0
            seen_penalty[id(node)] = node.penalty
            stack.extend(node.children.values())

    assert tree.total_tokens_emitted == appends
    # prefix-tree uniqueness: child ids match their keys, keys unique per node
    stack = [tree.root]
    while stack:
        node = stack.pop()
        for tid, child in node.children.items():
            assert child.token_id == tid
            assert child.parent is node
        stack.extend(node.children.values())
    # text round-trip over the active path
    path = tree.path_nodes()
    text = tree.decoded_text()
    cum = 0
    for t, node in enumerate(path):
        start = cum
        cum += len(node.token_text)
        lineno = 1 + text.count("\n", 0, start)
        line_start = 0 if lineno == 1 else text.rfind("\n", 0, start) + 1
        assert tree.locate(lineno, cum - line_start) is node
