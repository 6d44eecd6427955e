import pathlib

import pytest

from backgen.detection import (CheckPhase, Detector, ErrorReport,
                               StatementSegmenter, TestCase,
                               build_run_program, segment_statements)

CORPUS = pathlib.Path(__file__).parent / "fixtures" / "clean_corpus"


# -- ErrorReport invariants ---------------------------------------------------

def test_success_report_has_no_error_fields():
    with pytest.raises(ValueError):
        ErrorReport("success", error_type="syntax")
    with pytest.raises(ValueError):
        ErrorReport("success", lineno=3)
    ErrorReport.ok()


def test_failure_report_needs_known_type():
    with pytest.raises(ValueError):
        ErrorReport("failure", "flux_capacitor")
    with pytest.raises(ValueError):
        ErrorReport("maybe")
    ErrorReport("failure", "syntax", 1, 0)


# -- segmentation -------------------------------------------------------------

def test_boundary_after_simple_statement():
    assert segment_statements(["x = 1\n"]) == [0]


def test_compound_header_is_a_unit():
    assert segment_statements(["if x:\n"]) == [0]


def test_unclosed_bracket_suppresses_boundary():
    assert segment_statements(["y = (1 +\n"]) == []
    assert segment_statements(["y = (1 +\n", "2)\n"]) == [1]


def test_backslash_continuation_suppresses_boundary():
    assert segment_statements(["x = 1 + \\\n", "2\n"]) == [1]


def test_triple_string_suppresses_boundary():
    assert segment_statements(['s = """line\n', 'more\n', 'end"""\n']) == [2]


def test_broken_single_quote_line_still_bounds():
    # The string cannot continue past the newline; the unit is complete
    # (and broken), which is the detector's problem, not the segmenter's.
    assert segment_statements(["s = 'abc\n"]) == [0]


def test_unmatched_closer_bounds():
    assert segment_statements(["print(a))\n"]) == [0]


def test_mid_token_newline_bounds_at_that_token():
    assert segment_statements(["x = 1\ny", " = 2\n"]) == [0, 1]


def test_tokens_without_newline_never_bound():
    assert segment_statements(["print(", "a + b", ")"]) == []


def test_segmenter_reset_after_rollback():
    seg = StatementSegmenter()
    assert seg.feed("x = (1\n") is False
    seg.reset_to("x = 1\n")
    assert seg.feed("y = 2\n") is True


def test_statement_stream_over_program():
    tokens = ["def f(n):\n", "    total = 0\n", "    for i in range(n):\n",
              "        total += i\n", "    return total\n", "print(f(4))\n"]
    assert segment_statements(tokens) == list(range(len(tokens)))


def test_comment_and_blank_lines_bound():
    assert segment_statements(["# setup\n", "\n", "x = 1\n"]) == [0, 1, 2]


# -- detect -------------------------------------------------------------------

@pytest.fixture
def detector(client):
    return Detector(client)


def test_detect_static_success(detector):
    report = detector.detect("x = 1\nprint(x)\n", CheckPhase.STATIC_ONLY)
    assert report.result == "success"


def test_detect_static_genuine_syntax_failure(detector):
    report = detector.detect("x = (1\ny = 2\n", CheckPhase.STATIC_ONLY)
    assert report.failed
    assert report.error_type == "syntax"
    assert report.lineno == 1
    assert report.offset == 4


def test_detect_downgrades_unfinished_input(detector):
    for code in ("if x:\n", "def f():\n", "x = (1\n", "for i in r:\n"):
        assert detector.detect(code, CheckPhase.STATIC_ONLY).result == "success"


def test_detect_final_pass_keeps_unfinished_as_failure(detector):
    report = detector.detect("if x:\n", CheckPhase.STATIC_ONLY,
                             allow_incomplete=False)
    assert report.failed and report.error_type == "syntax"


def test_detect_run_with_input_division(client):
    detector = Detector(client, entry_point="f")
    code = "def f():\n    return 1 / 0\n"
    report = detector.detect(code, CheckPhase.RUN_WITH_INPUT,
                             tests=[TestCase("")])
    assert report.failed
    assert report.error_type == "division_by_zero"
    assert report.lineno == 2


def test_detect_run_stdin_style(detector):
    code = "a, b = map(int, input().split())\nprint(a // b)\n"
    report = detector.detect(code, CheckPhase.RUN_WITH_INPUT,
                             tests=[TestCase("8 0")])
    assert report.failed and report.error_type == "division_by_zero"
    assert report.lineno == 2


def test_driver_line_failures_carry_no_location(client):
    detector = Detector(client, entry_point="f")
    code = "def f(a, b):\n    return a + b\n"
    report = detector.detect(code, CheckPhase.RUN_WITH_INPUT,
                             tests=[TestCase("1")])  # arity error at the call
    assert report.failed and report.error_type == "type_mismatch"
    assert report.lineno is None


def test_detect_full_tests_mismatch(detector):
    code = "print(int(input()) * 3)\n"
    report = detector.detect(code, CheckPhase.FULL_TESTS,
                             tests=[TestCase("4", "8\n")])
    assert report.failed and report.error_type == "assertion_failed"
    report = detector.detect(code, CheckPhase.FULL_TESTS,
                             tests=[TestCase("4", "12\n")])
    assert report.result == "success"


def test_full_tests_skips_cases_without_outputs(detector):
    report = detector.detect("print(1)\n", CheckPhase.FULL_TESTS,
                             tests=[TestCase("whatever")])
    assert report.result == "success"


def test_build_run_program_entry_point():
    program, stdin = build_run_program("def f(x):\n    return x\n", "f",
                                       TestCase("41"))
    assert program.endswith("print(f(41))\n")
    assert stdin == ""
    program, stdin = build_run_program("print(input())\n", None, TestCase("hi"))
    assert program == "print(input())\n"
    assert stdin == "hi"


def test_determinism_of_detect(detector):
    code = "x = (1\ny = 2\n"
    first = detector.detect(code, CheckPhase.STATIC_ONLY)
    second = detector.detect(code, CheckPhase.STATIC_ONLY)
    assert first == second


# -- repetition ---------------------------------------------------------------

def test_repetition_fires_past_threshold(detector):
    code = "".join(f"print({i})\n" for i in range(6))
    report = detector.detect_repetition(code, threshold=5)
    assert report.failed and report.error_type == "repetition"
    assert report.lineno == 1


def test_repetition_reports_first_line_of_run(detector):
    code = "x = 0\n" + "".join(f"print({i})\n" for i in range(6))
    report = detector.detect_repetition(code, threshold=5)
    assert report.lineno == 2


def test_repetition_boundary_exactly_threshold_passes(detector):
    code = "".join(f"print({i})\n" for i in range(5))
    assert detector.detect_repetition(code, threshold=5).result == "success"


def test_repetition_alternating_kinds_pass(detector):
    code = "".join(f"x{i} = {i}\nprint(x{i})\n" for i in range(10))
    assert detector.detect_repetition(code, threshold=5).result == "success"


def test_repetition_nested_blocks_counted_separately(detector):
    # five prints at top level plus five inside a function: two runs of five
    inner = "".join(f"    print({i})\n" for i in range(5))
    code = "def f():\n" + inner + "".join(f"print({i})\n" for i in range(5))
    assert detector.detect_repetition(code, threshold=5).result == "success"
    code = "def f():\n" + "".join(f"    print({i})\n" for i in range(6))
    report = detector.detect_repetition(code, threshold=5)
    assert report.failed and report.lineno == 2


def test_repetition_elif_chain(detector):
    code = "x = 1\nif x == 0:\n    pass\n"
    code += "".join(f"elif x == {i}:\n    pass\n" for i in range(1, 6))
    report = detector.detect_repetition(code, threshold=5)
    assert report.failed and report.error_type == "repetition"
    assert report.lineno == 2
    short = "x = 1\nif x == 0:\n    pass\nelif x == 1:\n    pass\n"
    assert detector.detect_repetition(short, threshold=5).result == "success"


def test_repetition_ignores_trailing_incomplete_statement(detector):
    code = "x = 1\ny = 2\nif x:\n"
    assert detector.detect_repetition(code, threshold=5).result == "success"


def test_repetition_never_fires_on_clean_corpus(detector):
    files = sorted(CORPUS.glob("*.py"))
    assert len(files) >= 8
    for path in files:
        report = detector.detect_repetition(path.read_text(), threshold=5)
        assert report.result == "success", path.name


def test_downgrade_soundness_on_whole_statement_prefixes(detector):
    # Whole-statement prefixes of accepted programs are never syntax failures.
    for path in sorted(CORPUS.glob("*.py")):
        lines = path.read_text().splitlines(keepends=True)
        boundaries = segment_statements(lines)
        for b in boundaries:
            prefix = "".join(lines[:b + 1])
            report = detector.detect(prefix, CheckPhase.STATIC_ONLY)
            assert not (report.failed and report.error_type == "syntax"), (
                path.name, b, prefix[-80:])
