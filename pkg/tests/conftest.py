import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

# lines collected by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def digit_parity():
    from semeq.fixtures import digit_parity_fixture

    return digit_parity_fixture()


@pytest.fixture(scope="session")
def small_codebook(digit_parity):
    """Cheap digit/parity codebook shared by the unit tests."""
    from semeq.codebook import build_codebook, estimate_rho_matrix
    from semeq.ot import P1Config

    src, tgt, kmap = digit_parity
    cb = build_codebook(src, tgt, kmap, P1Config(max_outer_iters=3, max_fw_iters=3),
                        n_source=60, n_target=300, seed=3)
    cb.rho = estimate_rho_matrix(cb, src, tgt, 2000, seed=3)
    return cb
